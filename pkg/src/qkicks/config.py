"""Run configuration: `key = value` files with one `[section]` per command.

A RunConfig is the fully resolved description of one CLI run (scan spec plus
output policy).  Its canonical serialization is what the metadata sidecar
stores, and parsing that text back yields a byte-identical re-serialization,
so any run can be reconstructed exactly from its sidecar.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields

from .errors import InvalidParameterError
from .scan import ScanSpec

__all__ = ["RunConfig", "OUTPUT_ROOT_ENV", "WORKERS_ENV", "default_output_root"]

OUTPUT_ROOT_ENV = "QKICKS_OUTPUT_ROOT"
WORKERS_ENV = "QKICKS_WORKERS"

_OUTPUT_KEYS = (
    "output_dir",
    "basename",
    "overwrite",
    "workers",
    "checkpoint",
    "checkpoint_every",
    "binary",
)


def default_output_root() -> str:
    return os.environ.get(OUTPUT_ROOT_ENV, "runs")


@dataclass(frozen=True)
class RunConfig:
    """One resolved run: a ScanSpec plus where and how to write artifacts."""

    command: str
    spec: ScanSpec
    output_dir: str = ""
    basename: str = ""
    overwrite: bool = False
    workers: int | None = None
    checkpoint: bool = True
    checkpoint_every: int = 0
    binary: bool = False
    marks: tuple[tuple[str, float, float], ...] = ()

    def __post_init__(self) -> None:
        if not self.command:
            raise InvalidParameterError("command must be non-empty")
        if not self.output_dir:
            object.__setattr__(self, "output_dir", default_output_root())
        if not self.basename:
            object.__setattr__(self, "basename", self.command.replace("-", "_"))
        object.__setattr__(
            self,
            "marks",
            tuple((str(l), float(a), float(b)) for l, a, b in self.marks),
        )

    def to_config_text(self) -> str:
        lines = [f"[{self.command}]"]
        lines.extend(self.spec.canonical_text().rstrip("\n").splitlines())
        lines.append(f"output_dir = {self.output_dir}")
        lines.append(f"basename = {self.basename}")
        lines.append(f"overwrite = {'true' if self.overwrite else 'false'}")
        if self.workers is not None:
            lines.append(f"workers = {self.workers}")
        lines.append(f"checkpoint = {'true' if self.checkpoint else 'false'}")
        lines.append(f"checkpoint_every = {self.checkpoint_every}")
        lines.append(f"binary = {'true' if self.binary else 'false'}")
        for i, (label, a, b) in enumerate(self.marks, start=1):
            lines.append(f"mark{i} = {label} {a!r} {b!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config_text(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read_string(text)
        sections = parser.sections()
        if len(sections) != 1:
            raise InvalidParameterError(
                f"config text must hold exactly one section, found {sections}"
            )
        return cls.from_section(sections[0], dict(parser.items(sections[0])))

    @classmethod
    def from_section(cls, command: str, items: dict[str, str]) -> "RunConfig":
        spec_lines: list[str] = []
        out: dict = {}
        marks: dict[int, tuple[str, float, float]] = {}
        spec_field_names = {f.name for f in fields(ScanSpec)}
        for key, value in items.items():
            if key.startswith("axis") and key[4:].isdigit():
                spec_lines.append(f"{key} = {value}")
            elif key.startswith("mark") and key[4:].isdigit():
                parts = value.split()
                if len(parts) != 3:
                    raise InvalidParameterError(
                        f"{key}: expected '<label> <coord1> <coord2>', got {value!r}"
                    )
                marks[int(key[4:])] = (parts[0], float(parts[1]), float(parts[2]))
            elif key in spec_field_names:
                spec_lines.append(f"{key} = {value}")
            elif key in _OUTPUT_KEYS:
                out[key] = value
            else:
                raise InvalidParameterError(f"unknown config key {key!r}")
        spec = ScanSpec.from_canonical_text("\n".join(spec_lines) + "\n")
        kwargs: dict = {"command": command, "spec": spec}
        for key, value in out.items():
            if key in ("overwrite", "checkpoint", "binary"):
                if value not in ("true", "false"):
                    raise InvalidParameterError(f"{key}: expected true/false, got {value!r}")
                kwargs[key] = value == "true"
            elif key in ("workers", "checkpoint_every"):
                kwargs[key] = int(value)
            else:
                kwargs[key] = value
        kwargs["marks"] = tuple(marks[i] for i in sorted(marks))
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str, command: str) -> "RunConfig":
        if not os.path.exists(path):
            raise InvalidParameterError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        with open(path) as fh:
            parser.read_file(fh)
        if not parser.has_section(command):
            raise InvalidParameterError(f"config file {path} has no [{command}] section")
        return cls.from_section(command, dict(parser.items(command)))

    def section_items(self) -> dict[str, str]:
        """Key/value view of the canonical text (for flag overriding)."""
        items: dict[str, str] = {}
        for line in self.to_config_text().splitlines()[1:]:
            key, _, value = line.partition("=")
            items[key.strip()] = value.strip()
        return items

    def with_overrides(self, overrides: dict[str, str]) -> "RunConfig":
        items = self.section_items()
        items.update(overrides)
        return RunConfig.from_section(self.command, items)
