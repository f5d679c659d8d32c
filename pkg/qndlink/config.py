"""Config files and option merging for qndlink.

Run and sweep settings come from a YAML mapping and/or CLI flags. Files made
only of ``key = value`` lines (``#`` comments allowed) are read as the same
mapping, each value parsed as a YAML scalar or flow list. Flat keys
(``gain``, ``squeezing``, ``transmitivity`` ...) are translated into the
pydantic models of :mod:`qndlink.protocols` and :mod:`qndlink.sweep`.

Example ``run`` file::

    protocol: fig1
    gain: 1.0
    squeezing: 5
    transmitivity: 0.8
    noise_var: 1.0   # per noise operator
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Any, Optional

import yaml

from qndlink.channel import ChannelModel
from qndlink.protocols import ProtocolConfig
from qndlink.sweep import SweepSpec

RUN_KEYS = frozenset({
    "protocol", "gain", "gain_alice", "gain_bob", "squeezing", "transmitivity",
    "noise_var", "idealize_resources", "mode", "runs", "seed", "input_a", "input_b",
})

SWEEP_KEYS = RUN_KEYS | {"protocols", "gains", "squeezings", "transmitivities", "noise_vars"}

_KEY_VALUE = re.compile(r"^\s*([A-Za-z_][\w-]*)\s*=\s*(.*?)\s*$")


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def _key_value_lines(text: str) -> Optional[dict[str, Any]]:
    """Parse a file of ``key = value`` lines; None if any line has another shape."""
    lines = [line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    matches = [_KEY_VALUE.match(line) for line in lines]
    if not matches or not all(matches):
        return None
    return {m.group(1): yaml.safe_load(m.group(2)) if m.group(2) else None for m in matches}


def load_config_file(path: Path) -> dict[str, Any]:
    """Read a YAML mapping, or a file of ``key = value`` lines, from *path*.

    Raises FileNotFoundError if the file does not exist and ValueError if
    it is not a mapping.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        raw = _key_value_lines(text)
        if raw is None:
            raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValueError(f"Config file {path} is not valid YAML: {exc}") from exc
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ValueError(f"Config file {path} must hold a key: value mapping")
    return {str(key).replace("-", "_"): value for key, value in raw.items()}


def merge_options(file_options: dict[str, Any], flags: dict[str, Any]) -> dict[str, Any]:
    """Overlay CLI *flags* on *file_options*; unset (None) flags are ignored."""
    merged = dict(file_options)
    merged.update({key: value for key, value in flags.items() if value is not None})
    return merged


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------

def _reject_unknown(options: dict[str, Any], allowed: frozenset[str]) -> None:
    unknown = sorted(set(options) - allowed)
    if unknown:
        raise ValueError(f"Unknown config key(s): {', '.join(unknown)}")


def _split_gains(options: dict[str, Any]) -> tuple[Any, Any]:
    gain = options.get("gain")
    alice, bob = options.get("gain_alice"), options.get("gain_bob")
    if gain is not None and (alice is not None or bob is not None):
        raise ValueError("Give either gain or gain_alice/gain_bob, not both")
    if gain is not None:
        return gain, gain
    return (1.0 if alice is None else alice), (1.0 if bob is None else bob)


def _channel(options: dict[str, Any]) -> Optional[ChannelModel]:
    transmitivity = options.get("transmitivity")
    noise_var = options.get("noise_var")
    if transmitivity is None:
        if noise_var is not None:
            raise ValueError("noise_var needs a transmitivity")
        return None
    fields = {"transmitivity": transmitivity}
    if noise_var is not None:
        fields["noise_var"] = noise_var
    return ChannelModel.model_validate(fields)


def _optional(options: dict[str, Any], mapping: dict[str, str]) -> dict[str, Any]:
    return {target: options[key] for key, target in mapping.items() if options.get(key) is not None}


_SHARED = {
    "idealize_resources": "idealize_resources",
    "mode": "mode",
    "runs": "n_runs",
    "seed": "seed",
    "input_a": "input_a",
    "input_b": "input_b",
}


def protocol_config_from_options(options: dict[str, Any]) -> ProtocolConfig:
    """Build a ProtocolConfig from flat run options.

    Raises ValueError (including pydantic's ValidationError) on bad input.
    """
    _reject_unknown(options, RUN_KEYS)
    if options.get("protocol") is None:
        raise ValueError("No protocol given")
    gain_alice, gain_bob = _split_gains(options)
    fields = {
        "kind": options["protocol"],
        "gain_alice": gain_alice,
        "gain_bob": gain_bob,
        "channel": _channel(options),
        **_optional(options, {"squeezing": "squeezing", **_SHARED}),
    }
    return ProtocolConfig.model_validate(fields)


def _as_list(value: Any) -> Optional[list[Any]]:
    if value is None:
        return None
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _grid(options: dict[str, Any], singular: str, plural: str) -> Optional[list[Any]]:
    if options.get(singular) is not None and options.get(plural) is not None:
        raise ValueError(f"Give either {singular} or {plural}, not both")
    return _as_list(options.get(plural, options.get(singular)))


def sweep_spec_from_options(options: dict[str, Any]) -> SweepSpec:
    """Build a SweepSpec; scalars become one-point grids."""
    _reject_unknown(options, SWEEP_KEYS)
    fields: dict[str, Any] = {"kinds": _grid(options, "protocol", "protocols") or []}

    gains = _grid(options, "gain", "gains")
    if gains is not None:
        fields["gains"] = gains
    for key in ("gain_alice", "gain_bob"):
        if options.get(key) is not None:
            fields[f"gains_{key.split('_')[1]}"] = _as_list(options[key])
    if "gains" not in fields and "gains_alice" not in fields and "gains_bob" not in fields:
        fields["gains"] = [1.0]

    for singular, plural in (
        ("squeezing", "squeezings"),
        ("transmitivity", "transmitivities"),
        ("noise_var", "noise_vars"),
    ):
        values = _grid(options, singular, plural)
        if values is not None:
            fields[plural] = values

    fields.update(_optional(options, _SHARED))
    return SweepSpec.model_validate(fields)
