"""Run configuration: an INI file with one section per stage.

Every key has a default, so an empty file plus ``--set`` overrides is a
valid configuration. Example::

    [data]
    edges = data/cora/cora.edges
    attributes = data/cora/cora.coo

    [inject]
    p = 15
    q = auto
    k = 50

    [model]
    alpha = 0.2

    [run]
    seed = 7
    output = runs/cora
"""

from __future__ import annotations

import configparser
import zlib
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .inject import InjectionSpec
from .model import ModelConfig

DEFAULTS = {
    "data": {"edges": "", "attributes": "", "labels": "", "name": "dataset"},
    "inject": {"enabled": "true", "p": "15", "q": "auto", "k": "50", "seed": "auto", "mode": "copy"},
    "census": {"transform": "log1p"},
    "model": {
        "attr_hidden": "256,128",
        "struct_hidden": "32,32",
        "embedding_dim": "64",
        "alpha": "0.2",
        "epochs": "200",
        "lr": "0.001",
        "seed": "auto",
        "structure_encoder": "GNA",
        "structure_decoder": "GNA",
        "decoder_init": "abs",
    },
    "run": {"seed": "0", "output": "runs/default", "ks": "50,100,150"},
}


class ConfigError(ValueError):
    pass


def derive_seed(root: int, name: str) -> int:
    """Named sub-seed of a root seed; stable across platforms and runs."""
    return int(np.random.SeedSequence([int(root), zlib.crc32(name.encode())]).generate_state(1)[0])


def _ints(text):
    return tuple(int(t) for t in str(text).replace(" ", "").split(",") if t)


@dataclass
class RunConfig:
    edges: Path
    attributes: Path | None
    labels: Path | None
    name: str
    inject_enabled: bool
    injection: InjectionSpec
    model: ModelConfig
    transform: str
    output: Path
    seed: int
    ks: tuple = (50, 100, 150)
    raw: dict = field(default_factory=dict, repr=False)

    def check_files(self):
        for label, path in (("edges", self.edges), ("attributes", self.attributes),
                            ("labels", self.labels)):
            if path is not None and not path.is_file():
                raise ConfigError(f"{label} file not found: {path}")

    def with_model(self, **changes) -> "RunConfig":
        kw = {f.name: getattr(self.model, f.name) for f in fields(self.model)}
        kw.update(changes)
        out = RunConfig(**{f.name: getattr(self, f.name) for f in fields(self)})
        out.model = ModelConfig(**kw)
        return out


def read_ini(path=None, overrides=()) -> dict:
    cp = configparser.ConfigParser()
    cp.read_dict(DEFAULTS)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cp.read(path)
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, option = key.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        if section not in DEFAULTS or option not in DEFAULTS[section]:
            raise ConfigError(f"unknown config key {key!r}")
        cp.set(section, option, value.strip())
    for section in cp.sections():
        unknown = set(cp[section]) - set(DEFAULTS.get(section, {}))
        if section not in DEFAULTS or unknown:
            raise ConfigError(f"unknown config entries in [{section}]: {sorted(unknown) or section}")
    return {s: dict(cp[s]) for s in cp.sections()}


def build_config(raw: dict, base_dir: Path | None = None) -> RunConfig:
    base_dir = base_dir or Path.cwd()

    def path(value):
        if not value:
            return None
        p = Path(value)
        return p if p.is_absolute() else base_dir / p

    d, inj, mod, run = raw["data"], raw["inject"], raw["model"], raw["run"]
    try:
        root = int(run["seed"])
        inject_seed = derive_seed(root, "inject") if inj["seed"] == "auto" else int(inj["seed"])
        init_seed = derive_seed(root, "init") if mod["seed"] == "auto" else int(mod["seed"])
        spec = InjectionSpec(
            p=int(inj["p"]),
            q=None if inj["q"] == "auto" else int(inj["q"]),
            k=int(inj["k"]),
            seed=inject_seed,
            mode=inj["mode"],
        )
        model = ModelConfig(
            attr_hidden=_ints(mod["attr_hidden"]),
            struct_hidden=_ints(mod["struct_hidden"]),
            embedding_dim=int(mod["embedding_dim"]),
            alpha=float(mod["alpha"]),
            epochs=int(mod["epochs"]),
            lr=float(mod["lr"]),
            seed=init_seed,
            structure_encoder=mod["structure_encoder"],
            structure_decoder=mod["structure_decoder"],
            decoder_init=mod["decoder_init"],
        )
        enabled = inj["enabled"].lower() in ("1", "true", "yes", "on")
        ks = _ints(run["ks"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not d["edges"]:
        raise ConfigError("[data] edges is required")
    transform = raw["census"]["transform"]
    if transform not in ("raw", "log1p"):
        raise ConfigError(f"[census] transform must be raw or log1p, got {transform!r}")
    return RunConfig(
        edges=path(d["edges"]),
        attributes=path(d["attributes"]),
        labels=path(d["labels"]),
        name=d["name"],
        inject_enabled=enabled,
        injection=spec,
        model=model,
        transform=transform,
        output=path(run["output"]),
        seed=root,
        ks=ks,
        raw=raw,
    )


def load_config(path=None, overrides=()) -> RunConfig:
    # relative paths resolve against the working directory
    return build_config(read_ini(path, overrides))


def dump_ini(raw: dict) -> str:
    lines = []
    for section in DEFAULTS:
        lines.append(f"[{section}]")
        lines += [f"{k} = {v}" for k, v in sorted(raw[section].items())]
        lines.append("")
    return "\n".join(lines)
