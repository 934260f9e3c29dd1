"""Report serialization.

Reports are split into a deterministic part and a "timing" section, and
only the timing section may hold wall-clock measurements. Everything
else must be byte-identical across reruns of the same seeded
configuration; JSON is written with sorted keys and a fixed layout to
keep that property testable with a plain file compare.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

TIMING_KEY = "timing"


def _default(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_report(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_default) + "\n"


def write_json_report(path, payload: dict) -> None:
    Path(path).write_text(dumps_report(payload))


def read_json_report(path) -> dict:
    return json.loads(Path(path).read_text())


def strip_timing(payload: dict) -> dict:
    """Copy of a report without its wall-clock section, for determinism
    comparisons."""
    return {k: v for k, v in payload.items() if k != TIMING_KEY}


def write_epoch_csv(path, history) -> None:
    lines = ["epoch,steps,train_loss,train_acc,val_loss,val_acc"]
    for row in history:
        lines.append(
            f"{row.epoch},{row.steps},{row.train_loss!r},{row.train_acc!r},"
            f"{row.val_loss!r},{row.val_acc!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_tradeoff_csv(path, curve) -> None:
    lines = ["batch,eps_opt,relative_steps,relative_examples"]
    for p in curve.points:
        lines.append(
            f"{p.batch_size},{p.eps_opt!r},{p.relative_steps!r},{p.relative_examples!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def tradeoff_payload(curve) -> list[dict]:
    return [
        {
            "batch": p.batch_size,
            "eps_opt": p.eps_opt,
            "relative_steps": p.relative_steps,
            "relative_examples": p.relative_examples,
        }
        for p in curve.points
    ]


def write_sweep_csv(path, rows: list[dict]) -> None:
    lines = ["batch,learning_rate,steps_to_target,converged,final_val_loss,wall_seconds"]
    for r in rows:
        lines.append(
            f"{r['batch']},{r['learning_rate']!r},{r['steps_to_target']},"
            f"{str(r['converged']).lower()},{r['final_val_loss']!r},{r['wall_seconds']!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
