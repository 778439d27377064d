# resonance_lab/persistence.py
# JSON/CSV result files and the per-command run manifest.

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from resonance_lab import __version__, config
from resonance_lab.exact.rootfind import ComputedResonance, Rectangle
from resonance_lab.semiclassical.asymptotic import ResonancePrediction, Tier


def encode_complex(z: complex) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def decode_complex(data: dict) -> complex:
    return complex(data["re"], data["im"])


def to_jsonable(value):
    """Complex -> {re, im}, numpy scalars -> Python, non-finite floats -> None."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (complex, np.complexfloating)):
        return encode_complex(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    return value


# --- Record codecs ---

def prediction_to_dict(p: ResonancePrediction) -> dict:
    return {"n": p.n, "h": p.h, "E_n": p.E_n, "w_n": encode_complex(p.w_n), "z_n": encode_complex(p.z_n),
            "tier": p.tier.value}


def prediction_from_dict(data: dict) -> ResonancePrediction:
    return ResonancePrediction(
        n=data["n"],
        E_n=data["E_n"],
        w_n=decode_complex(data["w_n"]),
        z_n=decode_complex(data["z_n"]),
        tier=Tier(data["tier"]),
        h=data["h"],
    )


def computed_to_dict(c: ComputedResonance) -> dict:
    return {
        "z": encode_complex(c.z),
        "residual_norm": c.residual_norm,
        "winding_cell": c.winding_cell.to_dict(),
        "newton_iters": c.newton_iters,
        "paired_index": c.paired_index,
        "search_cell": c.search_cell.to_dict() if c.search_cell is not None else None,
    }


def computed_from_dict(data: dict) -> ComputedResonance:
    return ComputedResonance(
        z=decode_complex(data["z"]),
        residual_norm=data["residual_norm"],
        winding_cell=Rectangle(**data["winding_cell"]),
        newton_iters=data["newton_iters"],
        paired_index=data["paired_index"],
        search_cell=Rectangle(**data["search_cell"]) if data["search_cell"] is not None else None,
    )


CODECS = {
    ResonancePrediction: (prediction_to_dict, prediction_from_dict),
    ComputedResonance: (computed_to_dict, computed_from_dict),
}


def encode_record(record):
    for kind, (encode, _) in CODECS.items():
        if isinstance(record, kind):
            return {"type": kind.__name__, **encode(record)}
    return to_jsonable(record)


def decode_record(data):
    if isinstance(data, dict):
        for kind, (_, decode) in CODECS.items():
            if data.get("type") == kind.__name__:
                return decode({k: v for k, v in data.items() if k != "type"})
    return data


# --- Files ---

def _save_json(path: Path, document: dict):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, allow_nan=False)
        f.write("\n")


def _load_json(path: Path) -> dict | None:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (json.JSONDecodeError, FileNotFoundError) as e:
        logging.warning(f"Could not read result file {path}: {e}")
        return None


def result_stem(command: str, h: float) -> str:
    return f"{command}_h{h:g}"


def write_results(out_dir: Path, command: str, h: float, records: list, rows: list[dict],
                  summary: dict) -> tuple[Path, Path]:
    """Writes <command>_h<h>.json (records + summary) and its CSV mirror."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = result_stem(command, h)
    json_path, csv_path = out_dir / f"{stem}.json", out_dir / f"{stem}.csv"
    document = {
        "schema": config.SCHEMA_VERSION,
        "command": command,
        "h": h,
        "records": [encode_record(r) for r in records],
        "summary": to_jsonable(summary),
    }
    _save_json(json_path, document)
    columns = list(rows[0].keys()) if rows else []
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: to_jsonable(v) for k, v in row.items()})
    logging.info(f"Wrote {len(records)} record(s) to {json_path.name} and {csv_path.name}")
    return json_path, csv_path


def read_results(path: Path) -> dict | None:
    document = _load_json(Path(path))
    if document is None:
        return None
    document["records"] = [decode_record(r) for r in document.get("records", [])]
    return document


def round_trips(path: Path, records: list) -> bool:
    """The file parses and its decoded records equal the in-memory ones."""
    document = read_results(path)
    if document is None:
        return False
    expected = [r if isinstance(r, tuple(CODECS)) else to_jsonable(r) for r in records]
    if document["records"] != expected:
        logging.error(f"Round-trip mismatch in {path}")
        return False
    return True


@dataclass
class RunManifest:
    command: str
    config_hash: str
    deterministic: bool = True
    version: str = __version__
    schema: str = config.SCHEMA_VERSION
    results: list[dict] = field(default_factory=list)

    def add(self, h: float, json_path: Path, csv_path: Path, status: str, round_trip: bool,
            wall_time: float | None = None):
        entry = {
            "h": h,
            "json": json_path.name,
            "csv": csv_path.name,
            "status": status,
            "validation": {"files_exist": json_path.exists() and csv_path.exists(), "round_trip": round_trip},
        }
        if not self.deterministic and wall_time is not None:
            entry["wall_time"] = round(wall_time, 3)
        self.results.append(entry)

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "version": self.version,
            "command": self.command,
            "config_hash": self.config_hash,
            "results": self.results,
        }

    def write(self, out_dir: Path) -> Path:
        path = Path(out_dir) / f"manifest_{self.command}.json"
        _save_json(path, to_jsonable(self.to_dict()))
        logging.info(f"Manifest written: {path}")
        return path


def load_manifest(path: Path) -> dict | None:
    return _load_json(Path(path))
