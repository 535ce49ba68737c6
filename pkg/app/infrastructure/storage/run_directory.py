import os
from datetime import datetime
from typing import Optional

from app.infrastructure.config import RunConfig, dump_run_config
from app.shared.errors import DataError

RESOLVED_CONFIG = "resolved.cfg"


def create_run_dir(runs_root: str, seed: int, out_dir: Optional[str] = None) -> str:
    """
    ``out_dir`` when given, else ``<runs_root>/<timestamp>_seed<seed>``; an
    existing timestamped directory gets a numeric suffix instead of being
    reused.
    """
    if out_dir is None:
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
        base = os.path.join(runs_root, f"{stamp}_seed{seed}")
        out_dir, n = base, 1
        while os.path.exists(out_dir):
            out_dir = f"{base}_{n}"
            n += 1
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise DataError(f"cannot create run directory {out_dir}: {e.strerror}")
    return out_dir


def write_resolved_config(run_dir: str, config: RunConfig) -> str:
    path = os.path.join(run_dir, RESOLVED_CONFIG)
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(dump_run_config(config))
    except OSError as e:
        raise DataError(f"cannot write {path}: {e.strerror}")
    return path
