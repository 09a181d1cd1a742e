"""Command-line experiment runner.

Subcommands: analyze, encode, decode, leakage, opta, region, simulate.
Every output file is written atomically; exit status is 2 on validation or
guard errors and 3 on a key mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import zlib
from pathlib import Path

from . import __version__
from .bitstream import pack_file, unpack_file
from .causal_rd import (
    RateQuadruple,
    design_time_sharing,
    enumerate_functions,
    opta_envelope,
    opta_r,
    region_contains,
    separation_scheme_run,
)
from .eavesdrop_analysis import empirical_posterior, parsed_block_leakage, unparsed_leakage
from .errors import FormatError, KeyMismatch, SecureCodingError, Truncated
from .prefix_codes import build_huffman, conditional_huffman_length, huffman_length
from .realtime_codec import (
    decode_parsed,
    decode_stream_unparsed,
    encode_parsed,
    encode_unparsed,
    encoder_rate,
    key_rate,
)
from .secure_stream import KeyStream, PrivateRandom
from .source_model import SourceSpec, load_spec, marginals_and_chain, sample


# ------------------------------------------------------------------ io helpers

def write_atomic(path: str | Path, data: str | bytes) -> None:
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _record(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def symbols_checksum(symbols) -> str:
    data = ",".join(str(int(s)) for s in symbols).encode()
    return f"{zlib.crc32(data):08x}"


def format_symbols(symbols) -> str:
    symbols = [int(s) for s in symbols]
    body = "".join(f"{s}\n" for s in symbols)
    return body + f"# n={len(symbols)} crc32={symbols_checksum(symbols)}\n"


def read_symbols(path: str | Path) -> list[int]:
    """Parse a symbol file; the footer checksum is verified when present."""
    symbols, footer = [], None
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            footer = dict(kv.split("=", 1) for kv in line[1:].split())
            continue
        symbols.extend(int(tok) for tok in line.split())
    if footer is not None:
        if int(footer.get("n", len(symbols))) != len(symbols) or footer.get("crc32") != symbols_checksum(symbols):
            raise FormatError(f"{path}: footer checksum does not match contents")
    return symbols


def _run_path(bitfile: str) -> Path:
    return Path(bitfile + ".run.json")


# --------------------------------------------------------------- commands

def cmd_analyze(args) -> int:
    spec = load_spec(args.spec)
    cm = marginals_and_chain(spec)
    code = build_huffman(spec.px)
    rec = {
        "H_X": cm.H_X,
        "H_X_given_Y": cm.H_X_given_Y,
        "H_X_given_W": cm.H_X_given_W,
        "L_X": huffman_length(spec.px),
        "L_X_given_Y": conditional_huffman_length(cm.pxy),
        "l_max": code.l_max,
        "D_min": spec.D_min,
        "d_min": spec.d_min,
    }
    if args.format == "record":
        _emit(_record(rec), args.out)
    else:
        _emit(_csv([{"quantity": k, "value": v} for k, v in rec.items()]), args.out)
    return 0


def _load_input_symbols(args, spec: SourceSpec) -> list[int]:
    if args.input:
        return read_symbols(args.input)
    if args.n is None:
        raise SecureCodingError("encode needs --input or --n")
    return sample(spec, args.n, args.seed)[0].tolist()


def cmd_encode(args) -> int:
    spec = load_spec(args.spec)
    code = build_huffman(spec.px)
    symbols = _load_input_symbols(args, spec)
    ks = KeyStream(args.seed)
    if args.model == "parsed":
        stream, records = encode_parsed(symbols, code, ks, PrivateRandom(args.seed))
    else:
        stream, records = encode_unparsed(symbols, code, ks)
    run = {
        "command": "encode",
        "version": __version__,
        "seed": args.seed,
        "model": args.model,
        "n": len(symbols),
        "l_max": code.l_max,
        "bits": len(stream),
        "R_hat": encoder_rate(records) if records else 0.0,
        "R_K_hat": key_rate(records) if records else 0.0,
        "symbols_crc32": symbols_checksum(symbols),
    }
    write_atomic(args.out, pack_file(stream, args.model, code.l_max))
    write_atomic(_run_path(args.out), _record(run))
    if args.stages and args.model == "parsed":
        write_atomic(args.stages, stream.boundaries_csv())
    if args.key_log:
        write_atomic(args.key_log, ks.log_csv())
    sys.stderr.write(f"encoded {len(symbols)} symbols: R={run['R_hat']:.6g} R_K={run['R_K_hat']:.6g}\n")
    return 0


def cmd_decode(args) -> int:
    spec = load_spec(args.spec)
    code = build_huffman(spec.px)
    stream, model, l_max = unpack_file(Path(args.input).read_bytes())
    if l_max != code.l_max:
        raise FormatError(f"file l_max {l_max} does not match the code built from the spec ({code.l_max})")
    run_file = Path(args.run) if args.run else _run_path(args.input)
    run = json.loads(run_file.read_text()) if run_file.exists() else None
    ks = KeyStream(args.seed)
    try:
        if model == "parsed":
            symbols = decode_parsed(stream, code, ks)
        else:
            symbols = decode_stream_unparsed(stream, code, ks)
    except (Truncated, ValueError) as exc:
        if run is not None:
            raise KeyMismatch(f"decoding failed ({exc}); wrong key seed?") from exc
        raise
    if run is not None:
        if run["n"] != len(symbols) or run["symbols_crc32"] != symbols_checksum(symbols):
            raise KeyMismatch("decoded symbols fail the integrity check; wrong key seed?")
    else:
        sys.stderr.write(f"warning: no run record at {run_file}, integrity not checked\n")
    write_atomic(args.out, format_symbols(symbols))
    if args.key_log:
        write_atomic(args.key_log, ks.log_csv())
    return 0


def _parse_list(text: str, typ=float) -> list:
    return [typ(tok) for tok in text.split(",") if tok.strip()]


def cmd_leakage(args) -> int:
    spec = load_spec(args.spec)
    p = spec.px
    code = build_huffman(p)
    rows = []
    for n in _parse_list(args.n, int):
        if args.model == "parsed":
            rep = parsed_block_leakage(p, code)
            rep = type(rep)("parsed", n, rep.mi_bits, rep.max_tv)
        elif args.method == "mc":
            rep = empirical_posterior(p, code, n, args.trials, args.seed)
        else:
            rep = unparsed_leakage(p, code, n)
        rows.append({
            "model": rep.model, "n": rep.n, "mi_bits": rep.mi_bits, "max_tv": rep.max_tv,
            "method": rep.method, "trials": rep.trials,
        })
    if args.format == "record":
        _emit(_record({"seed": args.seed, "reports": rows}), args.out)
    else:
        _emit(_csv(rows), args.out)
    return 0


def cmd_opta(args) -> int:
    spec = load_spec(args.spec)
    functions = list(enumerate_functions(spec))
    curve = opta_envelope(spec, functions)
    grid = _parse_list(args.grid) if args.grid else curve.D.tolist()
    rows = []
    for D in grid:
        ts = design_time_sharing(spec, D, curve)
        if ts.f1 is ts.f2 or ts.lam == 1.0:
            how = ts.f1.describe()
        else:
            how = f"{ts.lam:.12g}*{ts.f1.describe()}+{1 - ts.lam:.12g}*{ts.f2.describe()}"
        rows.append({"D": D, "r": opta_r(spec, D, functions), "r_bar": curve(D), "achieved_by": how})
    if args.format == "record":
        _emit(_record({"vertices": curve.vertices, "points": rows}), args.out)
    else:
        _emit(_csv(rows), args.out)
    return 0


def cmd_region(args) -> int:
    spec = load_spec(args.spec)
    vals = _parse_list(args.quad)
    if len(vals) != 4:
        raise SecureCodingError("--quad needs four values R,RK,D,h")
    q = RateQuadruple(*vals)
    v = region_contains(q, spec)
    rec = {
        "R": q.R, "R_K": q.R_K, "D": q.D, "h": q.h,
        "inside": v.inside, "failed": list(v.failed),
        "r_bar": v.r_bar, "key_rate_required": v.key_rate_required,
        "H_X_given_W": v.H_X_given_W, "D_min": v.D_min,
    }
    if args.format == "record":
        _emit(_record(rec), args.out)
    else:
        verdict = "in region" if v.inside else "not in region: " + ",".join(v.failed)
        _emit(verdict + "\n", args.out)
    return 0


def cmd_simulate(args) -> int:
    spec = load_spec(args.spec)
    stats = separation_scheme_run(
        spec, args.D, args.h, args.n, seed=args.seed, trials=args.trials,
        sw_margin=args.sw_margin, sw_mode=args.sw_mode, full_otp=args.full_otp,
    )
    rec = stats.as_record()
    rec["seed"] = args.seed
    if args.format == "record":
        _emit(_record(rec), args.out)
    else:
        _emit(_csv([rec]), args.out)
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="securesc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt="csv"):
        p.add_argument("--spec", required=True, help="source spec (JSON or YAML)")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--format", choices=("csv", "record"), default=fmt)

    p = sub.add_parser("analyze", help="information measures and Huffman lengths")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("encode", help="encode symbols to a bitstream file")
    common(p)
    p.add_argument("--model", choices=("parsed", "unparsed"), required=True)
    p.add_argument("--input", help="symbol file; otherwise --n symbols are sampled")
    p.add_argument("--n", type=int)
    p.add_argument("--stages", help="write stage boundaries CSV (parsed model)")
    p.add_argument("--key-log", help="write per-stage key consumption CSV")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a bitstream file to symbols")
    common(p)
    p.add_argument("--input", required=True, help="bitstream file")
    p.add_argument("--run", help="encoder run record (default: INPUT.run.json)")
    p.add_argument("--key-log", help="write per-stage key consumption CSV")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("leakage", help="leakage audit per stage count")
    common(p)
    p.add_argument("--model", choices=("parsed", "unparsed"), required=True)
    p.add_argument("--n", default="1", help="comma-separated stage counts")
    p.add_argument("--method", choices=("exact", "mc"), default="exact")
    p.add_argument("--trials", type=int, default=10000)
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser("opta", help="OPTA curve and its lower convex envelope")
    common(p)
    p.add_argument("--grid", help="comma-separated distortion values (default: envelope vertices)")
    p.set_defaults(func=cmd_opta)

    p = sub.add_parser("region", help="test a (R, R_K, D, h) quadruple")
    common(p, fmt="csv")
    p.add_argument("--quad", required=True, help="R,RK,D,h")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("simulate", help="run the separation scheme")
    common(p, fmt="record")
    p.add_argument("--D", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--sw-margin", type=float, default=0.0, help="binning rate above r_bar(D)")
    p.add_argument("--sw-mode", choices=("search", "ideal"), default="search")
    p.add_argument("--full-otp", action="store_true", help="pad the whole bin index")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyMismatch as exc:
        sys.stderr.write(f"error: KeyMismatch: {exc}\n")
        return 3
    except (SecureCodingError, OSError, ValueError, KeyError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
