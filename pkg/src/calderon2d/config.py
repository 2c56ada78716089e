"""Run configuration: line-oriented key=value text with include directives."""

from __future__ import annotations

import os
from dataclasses import dataclass, field


DEFAULTS = {
    "scenario": "forward-dtn",
    "geometry": "disc",
    "sigma.preset": "identity",
    "grid.L": "2.0",
    "grid.n": "256",
    "mesh.h": "0.02",
    "modes": "16",
    "kschedule": "1,2,4,8",
    "tol": "1e-10",
    "seed": "0",
    "out": "",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    entries: dict = field(default_factory=dict)
    source: str = "<inline>"

    @classmethod
    def from_text(cls, text: str, source: str = "<inline>",
                  base_dir: str = ".") -> "RunConfig":
        entries = dict(DEFAULTS)
        cls._parse_into(entries, text, base_dir)
        return cls(entries, source)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path) as f:
            text = f.read()
        return cls.from_text(text, source=path,
                             base_dir=os.path.dirname(path) or ".")

    @staticmethod
    def _parse_into(entries: dict, text: str, base_dir: str) -> None:
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("include "):
                inc = line[len("include "):].strip()
                inc_path = inc if os.path.isabs(inc) else os.path.join(base_dir, inc)
                if not os.path.exists(inc_path):
                    raise ConfigError(f"include file not found: {inc_path}")
                with open(inc_path) as f:
                    RunConfig._parse_into(entries, f.read(),
                                          os.path.dirname(inc_path) or ".")
                continue
            if "=" not in line:
                raise ConfigError(f"malformed config line: {raw!r}")
            key, _, val = line.partition("=")
            entries[key.strip()] = val.strip()

    def to_text(self) -> str:
        return "".join(f"{k}={self.entries[k]}\n" for k in sorted(self.entries))

    # typed accessors -------------------------------------------------

    def get(self, key: str, default=None):
        return self.entries.get(key, default)

    def get_float(self, key: str) -> float:
        try:
            return float(self.entries[key])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from exc

    def get_int(self, key: str) -> int:
        try:
            return int(self.entries[key])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from exc

    def k_schedule(self) -> list:
        try:
            return [float(s) for s in self.entries["kschedule"].split(",") if s]
        except ValueError as exc:
            raise ConfigError(f"bad kschedule: {exc}") from exc

    def sigma_spec(self) -> dict:
        spec = {k.split(".", 1)[1]: v for k, v in self.entries.items()
                if k.startswith("sigma.")}
        if "file" in spec:
            spec = {"field": spec["file"]}
        return spec

    def validate(self) -> list:
        """All validation failures, exhaustively."""
        problems = []
        for key in ("grid.L", "mesh.h", "tol"):
            try:
                v = self.get_float(key)
                if v <= 0:
                    problems.append(f"{key} must be positive, got {v}")
            except ConfigError as exc:
                problems.append(str(exc))
        for key in ("grid.n", "modes", "seed"):
            try:
                v = self.get_int(key)
                if v < 0:
                    problems.append(f"{key} must be nonnegative, got {v}")
            except ConfigError as exc:
                problems.append(str(exc))
        try:
            n = self.get_int("grid.n")
            if n < 16 or (n & (n - 1)) != 0:
                problems.append(f"grid.n must be a power of two >= 16, got {n}")
        except ConfigError:
            pass
        try:
            self.k_schedule()
        except ConfigError as exc:
            problems.append(str(exc))
        geom = self.get("geometry")
        if geom not in ("disc", "halfplane", "exterior", "partial"):
            problems.append(f"unknown geometry {geom!r}")
        spec = self.sigma_spec()
        if "field" in spec and not os.path.exists(spec["field"]):
            problems.append(f"sigma field file not found: {spec['field']}")
        return problems
