# resonance_lab/run_config.py
# TOML run configurations: loading, validation with line-precise messages, overrides.

import hashlib
import json
import logging
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path

from resonance_lab import config
from resonance_lab.errors import PotentialError, RunConfigError
from resonance_lab.model.potential import Potential
from resonance_lab.semiclassical.asymptotic import Tier

KNOWN_TOLERANCES = {"shoot_rtol": config.SHOOT_RTOL}
TOP_LEVEL_KEYS = {"potential", "window", "h_list", "tier", "tolerances", "output_dir", "deterministic", "K"}


@dataclass(frozen=True)
class RunConfig:
    potential: Potential
    window: tuple[float, float]
    h_list: tuple[float, ...]
    M: float | None = None
    tier: Tier = Tier.CLOSED_FORM
    tolerances: dict = field(default_factory=lambda: dict(KNOWN_TOLERANCES))
    output_dir: Path = config.OUTPUT_DIR
    deterministic: bool = True
    K: int | None = None
    levels: tuple[float, ...] = ()
    source: str = ""

    def to_dict(self) -> dict:
        return {
            "potential": self.potential.to_dict(),
            "window": {"a": self.window[0], "b": self.window[1], "M": self.M, "levels": list(self.levels)},
            "h_list": list(self.h_list),
            "tier": self.tier.value,
            "tolerances": dict(sorted(self.tolerances.items())),
            "deterministic": self.deterministic,
            "K": self.K,
        }

    @property
    def config_hash(self) -> str:
        """sha256 of the effective configuration (output directory excluded)."""
        encoded = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(encoded).hexdigest()


def _line_of(text: str, key: str) -> int | None:
    """1-based line where a dotted key is set (or its table opens); None if not found."""
    lines = text.splitlines()
    *tables, name = key.split(".")
    table = ".".join(tables)
    current = ""
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        header = re.match(r"^\[\[?\s*([^\]]+?)\s*\]\]?", stripped)
        if header:
            current = header.group(1)
            if current == key:
                return number
            continue
        if current == table and re.match(rf"^{re.escape(name)}\s*=", stripped):
            return number
    # keys set inline ({a = 1, ...}) or dotted from the root
    for number, line in enumerate(lines, start=1):
        if re.search(rf"(^|[\s{{,.]){re.escape(name)}\s*=", line):
            return number
    return None


class _Validator:
    def __init__(self, text: str):
        self.text = text

    def fail(self, key: str, message: str):
        raise RunConfigError(message, key=key, line=_line_of(self.text, key))

    def number(self, table: dict, name: str, prefix: str, required: bool = True, default=None) -> float | None:
        key = f"{prefix}.{name}" if prefix else name
        if name not in table:
            if required:
                self.fail(prefix or name, f"Missing required key '{key}'.")
            return default
        value = table[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(key, f"'{key}' must be a number, got {value!r}.")
        return float(value)


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Validates a TOML document and returns the run configuration."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise RunConfigError(f"{source}: {e}", key="toml") from e
    check = _Validator(text)

    unknown = sorted(set(data) - TOP_LEVEL_KEYS)
    if unknown:
        check.fail(unknown[0], f"Unknown top-level key '{unknown[0]}'.")

    if not isinstance(data.get("potential"), dict):
        check.fail("potential", "A [potential] table is required.")
    try:
        potential = Potential.from_dict(data["potential"])
        potential.vanishing_orders()
    except PotentialError as e:
        key = "potential.declared_orders" if "order" in str(e).lower() else "potential"
        check.fail(key, str(e))
    except (KeyError, TypeError, ValueError) as e:
        check.fail("potential.pieces", f"Malformed potential: {e}")

    window = data.get("window")
    if not isinstance(window, dict):
        check.fail("window", "A [window] table with a and b is required.")
    a = check.number(window, "a", "window")
    b = check.number(window, "b", "window")
    M = check.number(window, "M", "window", required=False)
    if not a > 0:
        check.fail("window.a", f"window.a must be positive, got {a}.")
    if not b > a:
        check.fail("window.b", f"window.b = {b} must exceed window.a = {a}.")
    top = potential.sup()
    if not a > top:
        check.fail("window.a", f"window.a = {a} must exceed sup V = {top}.")
    if M is not None and not M > 0:
        check.fail("window.M", f"window.M must be positive, got {M}.")
    levels = window.get("levels", [])
    if not isinstance(levels, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0
                                           for v in levels):
        check.fail("window.levels", "window.levels must be a list of positive depths ν.")

    h_list = data.get("h_list")
    if not isinstance(h_list, list) or not h_list:
        check.fail("h_list", "h_list must be a non-empty list.")
    for h in h_list:
        if isinstance(h, bool) or not isinstance(h, (int, float)) or not 0 < h < 1:
            check.fail("h_list", f"Every h must lie in (0, 1); got {h!r}.")

    tier = data.get("tier", Tier.CLOSED_FORM.value)
    try:
        tier = Tier(tier)
    except ValueError:
        check.fail("tier", f"Unknown tier {tier!r}; expected one of {[t.value for t in Tier]}.")

    tolerances = dict(KNOWN_TOLERANCES)
    for name, value in data.get("tolerances", {}).items():
        if name not in KNOWN_TOLERANCES:
            check.fail(f"tolerances.{name}", f"Unknown tolerance '{name}'.")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            check.fail(f"tolerances.{name}", f"Tolerance '{name}' must be positive, got {value!r}.")
        tolerances[name] = float(value)

    deterministic = data.get("deterministic", True)
    if not isinstance(deterministic, bool):
        check.fail("deterministic", "deterministic must be true or false.")

    K = data.get("K")
    if K is not None:
        k, l = potential.vanishing_orders()
        if isinstance(K, bool) or not isinstance(K, int) or K < max(k, l):
            check.fail("K", f"K must be an integer >= max(k, l) = {max(k, l)}, got {K!r}.")

    output_dir = Path(data["output_dir"]) if "output_dir" in data else config.OUTPUT_DIR
    run = RunConfig(
        potential=potential,
        window=(a, b),
        h_list=tuple(sorted((float(h) for h in h_list), reverse=True)),
        M=M,
        tier=tier,
        tolerances=tolerances,
        output_dir=output_dir,
        deterministic=deterministic,
        K=K,
        levels=tuple(float(v) for v in levels),
        source=source,
    )
    logging.info(f"Loaded run config {source}: V={potential.name or 'unnamed'}, window=[{a}, {b}], h_list={list(run.h_list)}")
    return run


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise RunConfigError(f"Cannot read config file {path}: {e}", key="config") from e
    return parse_config(text, str(path))


def with_overrides(run: RunConfig, h: list[float] | None = None, M: float | None = None,
                   out: str | Path | None = None) -> RunConfig:
    """Applies command-line overrides, validated like the file values."""
    changes = {}
    if h:
        for value in h:
            if not 0 < value < 1:
                raise RunConfigError(f"Every h must lie in (0, 1); got {value}.", key="--h")
        changes["h_list"] = tuple(sorted(h, reverse=True))
    if M is not None:
        if not M > 0:
            raise RunConfigError(f"M must be positive, got {M}.", key="--M")
        changes["M"] = float(M)
    if out is not None:
        changes["output_dir"] = Path(out)
    return replace(run, **changes)
