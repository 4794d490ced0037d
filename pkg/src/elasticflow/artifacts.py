"""Output files: atomic writes, plot-data tables and the run manifest."""

import hashlib
import json
import os
import platform
import tempfile
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

MANIFEST_NAME = "manifest.json"


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (tuple, set)):
        return list(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _finite(obj):
    # JSON has no NaN/inf; emit null instead
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def dumps(obj):
    """Deterministic JSON; floats use ``repr`` (shortest round-tripping form, at most 17 digits)."""
    plain = json.loads(json.dumps(obj, default=_default))
    return json.dumps(_finite(plain), indent=2, sort_keys=True, allow_nan=False) + "\n"


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def plot_data(series, columns=("e", "Kosc", "ks2", "a", "dist", "L")):
    """Two-column ``t value`` blocks, one per tracked quantity, separated by blank lines."""
    t = series.column("t")
    blocks = []
    for name in columns:
        v = series.column(name)
        if np.all(np.isnan(v)):
            continue
        lines = [f"# {name}", "# t value"]
        lines += [f"{a:.17g} {b:.17g}" for a, b in zip(t, v) if np.isfinite(b)]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _version():
    from . import __version__

    return __version__


@dataclass
class RunManifest:
    config: dict
    seed: object = None
    version: str = field(default_factory=_version)
    platform: str = field(default_factory=lambda: f"{platform.system()} {platform.machine()} "
                          f"python {platform.python_version()} numpy {np.__version__}")
    files: dict = field(default_factory=dict)

    def record(self, path):
        path = Path(path)
        self.files[path.name] = sha256(path)

    def write(self, directory):
        return atomic_write(Path(directory) / MANIFEST_NAME, dumps(asdict(self)))

    def verify(self, directory):
        """Names of recorded files whose digest no longer matches."""
        return [name for name, digest in self.files.items() if sha256(Path(directory) / name) != digest]

    @classmethod
    def read(cls, directory):
        with open(Path(directory) / MANIFEST_NAME) as fh:
            return cls(**json.load(fh))


def write_outputs(directory, files, config, seed=None):
    """Write ``{name: text | bytes}`` atomically plus one manifest; returns the manifest."""
    directory = Path(directory)
    manifest = RunManifest(config=json.loads(dumps(config)), seed=seed)
    for name, data in files.items():
        manifest.record(atomic_write(directory / name, data))
    manifest.write(directory)
    return manifest
