"""Command-line front end.

    distdelay curve --mt 1 --mr 1 --eta 2 --snr-db 0:30:31 --delay inf
    distdelay exponent --mt 2 --mr 2 --eta-grid 0:8:33 --delay 1,2,4
    distdelay simulate --snr-db 15 --eta 2 --delay 5 --frames 1000000 --seed 1
    distdelay reproduce-figure 6 --out fig6.csv

CSV output starts with ``#`` comment lines holding the library version and
the resolved configuration as JSON, followed by a header row and data rows
(CRLF line endings, floats with 12 significant digits). JSON output carries
``"schema": "dd/1"``.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .channel import ChannelSpec, db_to_linear
from .distortion import (
    d_delay_siso,
    d_infinite,
    d_upper_asymptotic,
    d_zero,
    distortion_point,
)
from .effcap import (
    QosSpec,
    effective_capacity_quadrature,
    end_to_end_bound,
    theta_for_arrival_rate,
)
from .exponent import exponent_buffered, exponent_no_buffer, fit_exponent
from .queuesim import SimConfig, simulate

SCHEMA = "dd/1"
LN2 = math.log(2.0)


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("usage", message)
        sys.exit(2)


def _emit_error(kind, message):
    rec = {"schema": SCHEMA, "error": {"type": kind, "message": str(message)}}
    sys.stderr.write(json.dumps(rec) + "\n")


# ---------------------------------------------------------------------------
# argument parsing helpers


def parse_grid(text):
    """``lo:hi:steps`` -> linspace; a bare number -> one point."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:steps, got {text!r}") from None
    if steps < 1:
        raise argparse.ArgumentTypeError("steps must be >= 1")
    if steps == 1:
        if lo != hi:
            raise argparse.ArgumentTypeError("a single step needs lo == hi")
        return np.array([lo])
    return np.linspace(lo, hi, steps)


def parse_delays(text):
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if tok in ("inf", "zero"):
            out.append(tok)
            continue
        try:
            v = float(tok)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad delay {tok!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError("delays must be positive, 'zero' or 'inf'")
        out.append("inf" if math.isinf(v) else v)
    if not out:
        raise argparse.ArgumentTypeError("need at least one delay")
    return out


def _delay_key(d):
    return {"zero": 0.0, "inf": math.inf}.get(d, d)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


# ---------------------------------------------------------------------------
# output


def render_csv(columns, rows, config):
    buf = io.StringIO()
    buf.write(f"# distdelay {__version__}\r\n")
    buf.write("# config: " + json.dumps(_jsonable(config), sort_keys=True) + "\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def render_json(kind, columns, rows, config, extra=None):
    doc = {
        "schema": SCHEMA,
        "kind": kind,
        "version": __version__,
        "config": _jsonable(config),
        "columns": list(columns),
        "rows": [[_jsonable(v) for v in r] for r in rows],
    }
    if extra:
        doc.update(_jsonable(extra))
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands


CURVE_COLUMNS = ("snr_db", "tau_n", "eta", "distortion", "distortion_db", "method")


def curve_rows(mt, mr, eta, snr_db, delays):
    rows = []
    for s in sorted(snr_db):
        ch = ChannelSpec.from_db(mt, mr, s)
        for d in sorted(delays, key=_delay_key):
            p = distortion_point(ch, eta, d)
            rows.append((float(s), _delay_key(d), eta, p.value, 10 * math.log10(p.value), p.method))
    return rows


def run_curve(args):
    rows = curve_rows(args.mt, args.mr, args.eta, args.snr_db, args.delay)
    config = {"command": "curve", "mt": args.mt, "mr": args.mr, "eta": args.eta,
              "snr_db": list(args.snr_db), "delay": args.delay}
    return CURVE_COLUMNS, rows, config, None


EXPONENT_COLUMNS = ("mt", "mr", "tau_n", "eta", "analytic_alpha", "fitted_alpha")


def _curve_fn(mt, mr, eta, delay):
    def f(rho):
        return distortion_point(ChannelSpec(mt, mr, rho), eta, delay).value
    return f


def exponent_rows(mt, mr, eta_grid, delays, fit=False, fit_range=(30.0, 60.0)):
    base = ChannelSpec(mt, mr, 1.0)
    rows = []
    for d in sorted(delays, key=_delay_key):
        if d == "inf":
            raise CliError("the SNR exponent at infinite delay is unbounded in this model")
        for e in eta_grid:
            e = float(e)
            if d == "zero":
                alpha = exponent_no_buffer(base, e)
            else:
                alpha = exponent_buffered(base, e, d)
            fitted = None
            if fit and e > 0:
                fitted = fit_exponent(_curve_fn(mt, mr, e, d), fit_range, 16)
            rows.append((mt, mr, "zero" if d == "zero" else d, e, alpha, fitted))
    return rows


def run_exponent(args):
    rows = exponent_rows(args.mt, args.mr, args.eta_grid, args.delay, args.fit)
    config = {"command": "exponent", "mt": args.mt, "mr": args.mr,
              "eta_grid": list(args.eta_grid), "delay": args.delay, "fit": args.fit,
              "fit_snr_db": [30.0, 60.0]}
    return EXPONENT_COLUMNS, rows, config, None


SIM_COLUMNS = ("threshold", "overflow_prob", "stderr", "hits")


def run_simulate(args):
    if len(args.snr_db) != 1:
        raise CliError("simulate takes a single SNR")
    if len(args.delay) != 1 or args.delay[0] in ("zero", "inf"):
        raise CliError("simulate takes one finite normalized delay")
    scale = LN2 if args.units == "bits" else 1.0
    ch = ChannelSpec.from_db(args.mt, args.mr, float(args.snr_db[0]), model=args.model)
    qos = QosSpec.from_normalized_delay(args.delay[0], args.bandwidth, args.frame_duration,
                                        args.eta)
    analytic = ch.model == "iid_rayleigh_block" and ch.m_sup <= 8
    if args.rs is None:
        if not analytic:
            raise CliError("--rs is required for this channel")
        rs = effective_capacity_quadrature(ch, qos) / qos.k
    else:
        rs = args.rs * scale
    thresholds = None
    if args.thresholds:
        thresholds = tuple(float(t) * scale for t in args.thresholds.split(","))
    cfg = SimConfig(ch, qos, rs, thresholds, args.frames, args.seed)
    res = simulate(cfg)
    kappa = args.kappa
    if kappa is None:
        kappa = res.kappa_hat if 0 < res.kappa_hat <= 1 else 1.0
    bound = end_to_end_bound(rs, qos, kappa, args.o1)
    predicted = None
    if analytic:
        try:
            predicted = theta_for_arrival_rate(ch, qos.eta, qos.k, qos.k * rs)
        except ValueError:
            predicted = None
    rows = [(float(b) / scale, float(p), float(s), int(h)) for b, p, s, h in
            zip(res.thresholds, res.overflow_prob, res.overflow_stderr, res.tail_hits)]
    per = scale  # exponent per nat -> per output unit
    summary = {
        "fitted_theta": res.fitted_theta * per,
        "fitted_kappa": res.fitted_kappa,
        "fit_r2": res.fit_r2,
        "predicted_theta": None if predicted is None else predicted * per,
        "kappa_hat": res.kappa_hat,
        "kappa_stderr": res.kappa_stderr,
        "empirical_distortion": res.empirical_distortion,
        "distortion_stderr": res.distortion_stderr,
        "late_fraction": res.late_fraction,
        "end_to_end_bound": bound,
        "d_infinite": d_infinite(ch, qos.eta) if analytic else None,
        "frames_used": res.frames_used,
        "stable": res.stable,
        "seed": res.seed,
    }
    config = {"command": "simulate", "mt": args.mt, "mr": args.mr, "model": args.model,
              "snr_db": float(args.snr_db[0]), "eta": args.eta, "tau_n": args.delay[0],
              "theta_per_nat": qos.theta, "samples_per_frame": qos.k,
              "bandwidth_hz": args.bandwidth, "frame_duration_s": args.frame_duration,
              "rs": rs / scale, "units": args.units, "frames": args.frames, "seed": args.seed,
              "kappa": kappa, "o1": args.o1}
    return SIM_COLUMNS, rows, config, {"summary": summary}


# ---------------------------------------------------------------------------
# figures


def _fig2():
    snr = np.linspace(0.0, 40.0, 41)
    rows = []
    for s in snr:
        ch = ChannelSpec.from_db(1, 1, s)
        rows.append((s, d_zero(ch, 2.0), d_infinite(ch, 2.0)))
    params = {"channel": "1x1", "eta": 2.0, "snr_db": snr}
    return ("snr_db", "d_zero", "d_infinite"), rows, params


def _fig4():
    snr = np.linspace(0.0, 40.0, 41)
    delays = ["zero", 2.0, 5.0, 10.0, "inf"]
    rows = curve_rows(1, 1, 1.0, snr, delays)
    params = {"channel": "1x1", "eta": 1.0, "snr_db": snr, "delay": delays}
    return CURVE_COLUMNS, rows, params


def _fig5():
    snr = np.linspace(0.0, 40.0, 17)
    taus = [1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0, 15.0, 20.0]
    rows = curve_rows(1, 1, 1.0, snr, taus + ["inf"])
    params = {"channel": "1x1", "eta": 1.0, "snr_db": snr, "delay": taus + ["inf"]}
    return CURVE_COLUMNS, rows, params


def _fig6():
    rho = float(db_to_linear(15.0))
    taus = np.concatenate([np.arange(5.0, 20.0, 1.0), np.arange(20.0, 101.0, 5.0)])
    d_inf = d_infinite(ChannelSpec(1, 1, rho), 1.0)
    rows = [(t, d_delay_siso(rho, 1.0, t), d_upper_asymptotic(rho, t), d_inf) for t in taus]
    params = {"channel": "1x1", "snr_db": 15.0, "eta": 1.0, "tau_n": taus,
              "note": "the asymptotic bound is defined for unit bandwidth ratio"}
    return ("tau_n", "closed_form", "upper_bound", "d_infinite"), rows, params


def _exponent_table(settings, taus, eta_grid):
    rows = []
    for mt, mr in settings:
        rows.extend(exponent_rows(mt, mr, eta_grid, taus))
    return rows


def _fig7():
    eta = np.linspace(0.0, 20.0, 81)
    taus = ["zero", 1.0, 2.0, 4.0]
    rows = _exponent_table([(2, 2)], taus, eta)
    params = {"channel": "2x2", "tau_n": taus, "eta_grid": eta}
    return EXPONENT_COLUMNS, rows, params


def _fig8():
    eta = np.linspace(0.0, 25.0, 101)
    settings = [(1, 1), (1, 2), (2, 2), (2, 4)]
    rows = _exponent_table(settings, [5.0], eta)
    params = {"channels": [f"{a}x{b}" for a, b in settings], "tau_n": 5.0, "eta_grid": eta}
    return EXPONENT_COLUMNS, rows, params


FIGURES = {2: _fig2, 4: _fig4, 5: _fig5, 6: _fig6, 7: _fig7, 8: _fig8}


def run_reproduce_figure(args):
    if args.figure not in FIGURES:
        raise CliError(f"unknown figure {args.figure}; choose from {sorted(FIGURES)}")
    columns, rows, params = FIGURES[args.figure]()
    config = {"command": "reproduce-figure", "figure": args.figure, "parameters": params}
    return columns, rows, config, None


# ---------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="distdelay", description="Distortion/delay tradeoff over block fading.")
    p.add_argument("--version", action="version", version=f"distdelay {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, delay_default):
        sp.add_argument("--mt", type=int, default=1)
        sp.add_argument("--mr", type=int, default=1)
        sp.add_argument("--delay", type=parse_delays, default=parse_delays(delay_default),
                        help="comma list of normalized delays, or inf / zero")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    c = sub.add_parser("curve", help="distortion vs SNR at fixed delays")
    common(c, "inf")
    c.add_argument("--eta", type=float, default=1.0)
    c.add_argument("--snr-db", type=parse_grid, default=parse_grid("0:30:31"))

    e = sub.add_parser("exponent", help="SNR exponent vs bandwidth ratio")
    common(e, "1")
    e.add_argument("--eta-grid", type=parse_grid, default=parse_grid("0:10:41"))
    e.add_argument("--fit", action="store_true", help="add slopes fitted over 30-60 dB")

    s = sub.add_parser("simulate", help="queue simulation and overflow exponent")
    common(s, "5")
    s.add_argument("--eta", type=float, default=1.0)
    s.add_argument("--snr-db", type=parse_grid, default=parse_grid("15"))
    s.add_argument("--model", choices=("iid_rayleigh_block", "static"),
                   default="iid_rayleigh_block")
    s.add_argument("--frames", type=int, default=1_000_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rs", type=float, default=None,
                   help="quantizer rate per sample (default: effective capacity at the delay)")
    s.add_argument("--thresholds", default=None, help="comma list of buffer levels")
    s.add_argument("--units", choices=("nats", "bits"), default="nats")
    s.add_argument("--kappa", type=float, default=None)
    s.add_argument("--o1", type=float, default=1.0)
    s.add_argument("--bandwidth", type=float, default=1e5, help="source bandwidth in Hz")
    s.add_argument("--frame-duration", type=float, default=2e-3, help="seconds")

    f = sub.add_parser("reproduce-figure", help="data behind a figure")
    f.add_argument("figure", type=int, nargs="?")
    f.add_argument("--figure", dest="figure_opt", type=int)
    f.add_argument("--out", default=None)
    f.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


COMMANDS = {
    "curve": run_curve,
    "exponent": run_exponent,
    "simulate": run_simulate,
    "reproduce-figure": run_reproduce_figure,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "reproduce-figure":
        args.figure = args.figure if args.figure is not None else args.figure_opt
        if args.figure is None:
            _emit_error("usage", "a figure id is required")
            return 2
    try:
        columns, rows, config, extra = COMMANDS[args.command](args)
        if args.format == "json":
            text = render_json(args.command, columns, rows, config, extra)
        else:
            text = render_csv(columns, rows, config)
        _write(text, args.out)
        if args.command == "simulate" and args.format == "csv" and args.out not in (None, "-"):
            _write(render_json("simulate-summary", (), (), config, extra), args.out + ".json")
        if args.command == "reproduce-figure" and args.out not in (None, "-"):
            side = {"schema": SCHEMA, "version": __version__, "figure": args.figure,
                    "parameters": _jsonable(config["parameters"])}
            _write(json.dumps(side, sort_keys=True, indent=2) + "\n", args.out + ".json")
    except (CliError, ValueError, ArithmeticError, OSError) as exc:
        _emit_error(type(exc).__name__, exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
