"""``experiments`` command-line entry point.

Parameters are layered: the packaged default config for the subcommand,
then an optional ``--config`` file, then command-line flags.  Config files
hold ``key = value`` lines whose keys are the flag names without dashes.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from . import experiments as ex
from .errors import DimensionLimitError, IntegrationError, ThermSqueezeError, TruncationError
from .tables import write_table

SUBCOMMANDS = ("cw", "g2", "peak-map", "coherence-map", "gauss", "validate", "steady")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be start:stop:num, got {text!r}")
    return list(ex.grid_values(float(parts[0]), float(parts[1]), int(parts[2])))


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _fmt(text: str) -> str:
    if text not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {text!r}")
    return text


CONVERTERS = {
    "g0": _floats, "nb": _floats, "g0-grid": _grid, "nb-grid": _grid,
    "nth0": float, "sigma": float, "to": float, "tmax": float, "dt-out": float,
    "dim": int, "rtol": float, "atol": float, "tail-tol": float, "step": float,
    "workers": int, "negative-control": _bool, "out": str, "format": _fmt,
}

# Keys each subcommand understands, besides out / format.
ACCEPTS = {
    "cw": {"g0", "nb", "nth0", "tmax", "dt-out", "rtol", "atol"},
    "g2": {"g0", "nb", "tmax", "dt-out", "rtol", "atol"},
    "peak-map": {"g0", "nb", "g0-grid", "nb-grid", "tmax", "dt-out", "rtol", "atol", "workers"},
    "gauss": {"g0", "nb", "sigma", "to", "tmax", "dt-out"},
    "validate": {"g0", "nb", "nth0", "tmax", "dt-out", "dim", "rtol", "atol", "tail-tol",
                 "step", "negative-control"},
    "steady": {"g0", "nb"},
}
ACCEPTS["coherence-map"] = ACCEPTS["peak-map"]

# Setting one member of a pair in a higher layer clears the other.
_EXCLUSIVE = {"g0": "g0-grid", "g0-grid": "g0", "nb": "nb-grid", "nb-grid": "nb"}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in CONVERTERS:
            raise InputError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def packaged_config(sub: str) -> dict[str, str]:
    text = resources.files("thermsqueeze").joinpath("configs", f"{sub}.cfg").read_text()
    return parse_config_text(text, f"{sub}.cfg")


def _layer(base: dict, top: dict) -> dict:
    merged = dict(base)
    for key, value in top.items():
        merged.pop(_EXCLUSIVE.get(key, ""), None)
        merged[key] = value
    return merged


def resolve(sub: str, config_path: str | None, flags: dict[str, str]) -> dict:
    """Merge the config layers and convert values; raise InputError on bad input."""
    raw = packaged_config(sub)
    if config_path is not None:
        try:
            text = Path(config_path).read_text()
        except OSError as exc:
            raise InputError(f"cannot read config {config_path}: {exc}") from None
        raw = _layer(raw, parse_config_text(text, config_path))
    raw = _layer(raw, flags)
    allowed = ACCEPTS[sub] | {"out", "format"}
    extra = sorted(set(raw) - allowed)
    if extra:
        raise InputError(f"{sub} does not take {', '.join(extra)}")
    values = {}
    for key, text in raw.items():
        try:
            values[key] = CONVERTERS[key](text)
        except ValueError as exc:
            raise InputError(f"bad value for {key}: {exc}") from None
    return values


def _single(values: dict, key: str) -> float:
    v = values[key]
    if len(v) != 1:
        raise InputError(f"{key} takes exactly one value here, got {len(v)}")
    return v[0]


def _integration_opts(values: dict) -> dict:
    return {k.replace("-", "_"): values[k] for k in ("rtol", "atol") if k in values}


def _require(values: dict, *keys: str):
    missing = [k for k in keys if k not in values]
    if missing:
        raise InputError(f"missing parameter(s): {', '.join(missing)}")


def run_subcommand(sub: str, values: dict) -> tuple[dict, ex.ValidationReport | None]:
    """Dispatch to the experiment runner; return (tables, validation report or None)."""
    opts = _integration_opts(values)
    if "dt-out" in values:
        opts["dt_out"] = values["dt-out"]
    if sub == "cw":
        _require(values, "g0", "nb", "nth0", "tmax")
        return ex.run_cw(_single(values, "g0"), values["nb"], values["nth0"], values["tmax"],
                         **opts), None
    if sub == "g2":
        _require(values, "g0", "nb")
        return ex.run_g2(values["g0"], values["nb"], values.get("tmax"), **opts), None
    if sub in ("peak-map", "coherence-map"):
        g0s = values.get("g0", values.get("g0-grid"))
        nbs = values.get("nb", values.get("nb-grid"))
        runner = ex.run_peak_map if sub == "peak-map" else ex.run_coherence_map
        return runner(g0s, nbs, workers=values.get("workers", 1), tmax=values.get("tmax"),
                      **opts), None
    if sub == "gauss":
        _require(values, "g0", "nb", "sigma", "to", "tmax")
        return ex.run_gauss(_single(values, "g0"), values["sigma"], values["to"], values["nb"],
                            values["tmax"], **opts), None
    if sub == "steady":
        _require(values, "g0", "nb")
        return ex.run_steady(values["g0"], values["nb"]), None
    _require(values, "g0", "nb", "tmax")
    extra = {k.replace("-", "_"): values[k] for k in ("nth0", "dim", "tail-tol", "step")
             if k in values}
    report = ex.run_validate(_single(values, "g0"), _single(values, "nb"), tmax=values["tmax"],
                             negative_control=values.get("negative-control", False),
                             **extra, **opts)
    tables = {"validate_comparison": report.comparison, "validate_checks": report.checks_table()}
    return tables, report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="experiments",
        description="Reproduce squeezed-thermal-state figure data and validate the analytic "
                    "solution against a master-equation oracle.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="key = value file layered over the packaged defaults")
    parser.add_argument("--out", help="output directory (default results/<subcommand>)")
    parser.add_argument("--format", help="csv (default) or json")
    parser.add_argument("--g0", help="pump ratio(s), comma separated")
    parser.add_argument("--nb", help="bath occupation(s), comma separated")
    parser.add_argument("--g0-grid", help="start:stop:num grid for the map subcommands")
    parser.add_argument("--nb-grid", help="start:stop:num grid for the map subcommands")
    parser.add_argument("--nth0", help="initial thermal occupation")
    parser.add_argument("--sigma", help="Gaussian pulse width (units of 1/Gamma)")
    parser.add_argument("--to", help="Gaussian pulse centre (units of 1/Gamma)")
    parser.add_argument("--tmax", help="horizon in units of 1/Gamma")
    parser.add_argument("--dt-out", help="output grid spacing")
    parser.add_argument("--dim", help="Fock dimension for validate (default: automatic)")
    parser.add_argument("--rtol")
    parser.add_argument("--atol")
    parser.add_argument("--tail-tol", help="oracle truncation tail tolerance")
    parser.add_argument("--step", help="oracle RK4 step")
    parser.add_argument("--workers", help="process pool size for the map subcommands")
    parser.add_argument("--negative-control", action="store_const", const="1",
                        help="validate against a deliberately wrong analytic state")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    sub = args.subcommand
    flags = {k.replace("_", "-"): v for k, v in vars(args).items()
             if v is not None and k not in ("subcommand", "config")}
    try:
        values = resolve(sub, args.config, flags)
        tables, report = run_subcommand(sub, values)
    except DimensionLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (TruncationError, IntegrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (InputError, ThermSqueezeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    out_dir = Path(values.get("out", Path("results") / sub))
    fmt = values.get("format", "csv")
    for name, table in tables.items():
        print(write_table(out_dir / name, table, fmt))
    if report is None:
        return EXIT_OK
    print(f"dim = {report.dim}")
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  {c.name} = {c.value:.3e} (tolerance {c.tolerance:.0e})")
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
