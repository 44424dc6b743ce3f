"""Node configuration: `node.toml` keys, overridable by CLI flags."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .keys import address_from_hex

MAX_DIFFICULTY_BITS = 32


class ConfigError(ValueError):
    pass


@dataclass
class NodeConfig:
    listen_port: int = 7420
    data_dir: str = "./medichain-data"
    difficulty_bits: int = 12
    peers: list[str] = field(default_factory=list)
    dev_mode: bool = False
    automine_interval: float | None = None
    challenge_lifetime: float = 120.0
    session_lifetime: float = 3600.0
    # Non-dev deployments fund genesis from here: [(address, wei)].
    genesis_alloc: list[tuple[bytes, int]] = field(default_factory=list)

    def __post_init__(self):
        if not 0 <= self.difficulty_bits <= MAX_DIFFICULTY_BITS:
            raise ConfigError(
                f"difficulty_bits must be 0..{MAX_DIFFICULTY_BITS}"
            )

    @property
    def data_path(self) -> Path:
        return Path(self.data_dir)

    @property
    def chain_file(self) -> Path:
        return self.data_path / "chain.jsonl"


def load_config(path: str | Path) -> NodeConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return config_from_dict(doc)


def config_from_dict(doc: dict) -> NodeConfig:
    kwargs = {}
    simple = {
        "listen_port": int,
        "data_dir": str,
        "difficulty_bits": int,
        "dev_mode": bool,
        "challenge_lifetime": float,
        "session_lifetime": float,
    }
    for key, cast in simple.items():
        if key in doc:
            kwargs[key] = cast(doc[key])
    if "automine_interval" in doc:
        kwargs["automine_interval"] = float(doc["automine_interval"])
    if "peers" in doc:
        peers = doc["peers"]
        if not isinstance(peers, list) or not all(isinstance(p, str) for p in peers):
            raise ConfigError("peers must be a list of URLs")
        kwargs["peers"] = list(peers)
    if "genesis_alloc" in doc:
        alloc = []
        for entry in doc["genesis_alloc"]:
            try:
                alloc.append(
                    (address_from_hex(entry["address"]), int(entry["wei"]))
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad genesis_alloc entry: {entry!r}") from exc
        kwargs["genesis_alloc"] = alloc
    return NodeConfig(**kwargs)
