"""``shuttercert`` command-line interface.

Exit codes: 0 success, 2 usage, 3 I/O or format, 4 infeasible statistics,
5 insufficient entropy, 6 oracle tolerance breach.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .certify import poisson_mixture
from .checks import SCOPES, run_oracle_check
from .errors import FormatError
from .extractor import DEFAULT_DELTA_LOG2
from .io import read_cert, read_rounds, write_bits, write_cert, write_rounds
from .model import Assumption, MeanConstrainedSource, MixedSource, ProtocolConfig, SimpleSource, StrategyMix
from .pipeline import DEFAULT_Y_LENGTH, certify_batches, extract_batches
from .protocol import AdversarialDevice, HonestDevice, run_batches

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4
EXIT_INSUFFICIENT = 5
EXIT_ORACLE = 6


class UsageError(Exception):
    pass


def _model_flags(p):
    g = p.add_argument_group("source model")
    g.add_argument("--p", type=float, help="signal probability (simple model)")
    g.add_argument("--mu", type=float, help="mean photon number")
    g.add_argument("--pi", type=float, help="beam-splitter reflection probability")
    g.add_argument("--gamma-file", type=Path,
                   help="mixture as JSON [[gamma, p], ...] or two-column text (known model)")
    g.add_argument("--tail-epsilon", type=float, default=1e-12,
                   help="Poisson tail mass folded onto p = 1 (known model from --mu/--pi)")


def _load_gamma(path):
    text = path.read_text()
    try:
        pairs = json.loads(text)
    except json.JSONDecodeError:
        pairs = np.loadtxt(path, delimiter=None if "," not in text else ",", ndmin=2).tolist()
    return MixedSource.from_pairs([tuple(r) for r in pairs], normalize=True)


def build_model(kind, args):
    kind = Assumption.parse(kind)
    if kind is Assumption.SIMPLE:
        if args.p is None:
            raise UsageError("the simple model needs --p")
        return SimpleSource(args.p)
    if kind is Assumption.KNOWN:
        if args.gamma_file is not None:
            return _load_gamma(args.gamma_file)
        if args.mu is None or args.pi is None:
            raise UsageError("the known model needs --gamma-file or both --mu and --pi")
        return poisson_mixture(args.mu, args.pi, args.tail_epsilon)
    if args.mu is None or args.pi is None:
        raise UsageError("the mean model needs --mu and --pi")
    return MeanConstrainedSource(args.mu, args.pi)


def _parse_lambda(text, k):
    rows = [r for r in text.split(";") if r.strip()]
    vals = [[float(v) for v in r.split(",")] for r in rows]
    if len(vals) == 1 and k > 1:
        vals = vals * k
    if len(vals) != k or any(len(v) != 4 for v in vals):
        raise UsageError("--lambda takes 'N,Y,H,notH' per component, components separated by ';'")
    lam = np.array(vals)
    return StrategyMix(lam[:, 0], lam[:, 1], lam[:, 2], lam[:, 3])


def cmd_simulate(args):
    model = build_model(args.model, args)
    if args.rounds < 1 or args.batches < 1:
        raise UsageError("--rounds and --batches must be positive")
    cfg = ProtocolConfig(args.rounds, args.test_rate, rng_seed=args.seed)
    if args.device == "honest":
        device = HonestDevice(model, args.eta, args.dark, args.extinction)
    else:
        if isinstance(model, MeanConstrainedSource):
            raise UsageError("adversarial devices need a simple or known model")
        if args.lambda_ is None:
            raise UsageError("--device adversarial needs --lambda")
        k = 1 if isinstance(model, SimpleSource) else len(model)
        device = AdversarialDevice(model, _parse_lambda(args.lambda_, k), seed=args.seed)
    batches = run_batches(cfg, device, args.batches, threads=args.threads)
    write_rounds(args.out, batches, args.rounds, args.test_rate)
    tot = np.array([b.counts() for b in batches]).sum(axis=0)
    gen = sum(len(b) - int(b.round_type.sum()) for b in batches)
    gen_clicks = sum(int(b.generation_bits().sum()) for b in batches)
    summary = {
        "rounds": args.rounds * args.batches,
        "batches": args.batches,
        "test_open": int(tot[0]),
        "test_closed": int(tot[2]),
        "click_rate_open": float(tot[1] / tot[0]) if tot[0] else None,
        "click_rate_closed": float(tot[3] / tot[2]) if tot[2] else None,
        "generation_rounds": gen,
        "click_rate_generation": gen_clicks / gen if gen else None,
        "out": str(args.out),
    }
    print(json.dumps(summary))
    return 0


def cmd_certify(args):
    model = build_model(args.assumption, args)
    if not (0 < args.epsilon < 1):
        raise UsageError("--epsilon must lie in (0, 1)")
    _, batches = read_rounds(args.infile)
    results = certify_batches(batches, model, args.epsilon, clamp=args.clamp, threads=args.threads)
    rows = [r.cert_row() for r in results]
    if args.json:
        write_cert(args.json, rows)
    else:
        for row in rows:
            print(json.dumps(row))
    if not all(r["feasible"] for r in rows):
        bad = [r["batch"] for r in rows if not r["feasible"]]
        print(f"infeasible statistics in batches {bad}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return 0


def cmd_extract(args):
    if args.delta_log2 >= 0:
        raise UsageError("--delta-log2 must be negative")
    if args.y_length < 1:
        raise UsageError("--y-length must be positive")
    _, batches = read_rounds(args.infile)
    rows = read_cert(args.cert)
    if len(rows) != len(batches):
        raise UsageError(f"certificate covers {len(rows)} batches, rounds file has {len(batches)}")
    rows.sort(key=lambda r: r["batch"])
    if [r["batch"] for r in rows] != list(range(len(batches))):
        raise FormatError("certificate batch indices do not match the rounds file")
    report = extract_batches(batches, rows, args.y_length, args.delta_log2, args.seed)
    write_bits(args.out, report.bits)
    manifest = report.manifest()
    manifest["input"] = str(args.infile)
    if args.manifest:
        Path(args.manifest).write_text(json.dumps(manifest, indent=2) + "\n")
    print(json.dumps({k: manifest[k] for k in ("n", "m", "h", "bit_count", "batches_used")}))
    if report.extracted_bits == 0:
        print("no batch supports a positive output length", file=sys.stderr)
        return EXIT_INSUFFICIENT
    return 0


def cmd_oracle_check(args):
    if args.instances < 1:
        raise UsageError("--instances must be at least 1")
    report = run_oracle_check(args.scope, args.instances, args.seed)
    print(json.dumps(report))
    return 0 if report["passed"] else EXIT_ORACLE


def build_parser():
    ap = argparse.ArgumentParser(prog="shuttercert", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate protocol rounds")
    s.add_argument("--model", choices=["simple", "known", "mean"], required=True)
    _model_flags(s)
    s.add_argument("--batches", type=int, default=1)
    s.add_argument("--rounds", type=int, default=100000, help="rounds per batch")
    s.add_argument("--test-rate", type=float, default=0.08)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--device", choices=["honest", "adversarial"], default="honest")
    s.add_argument("--lambda", dest="lambda_", help="strategy weights 'N,Y,H,notH[;...]'")
    s.add_argument("--eta", type=float, default=1.0)
    s.add_argument("--dark", type=float, default=0.0)
    s.add_argument("--extinction", type=float, default=0.0)
    s.add_argument("--threads", type=int)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("certify", help="certify per-batch min-entropy")
    c.add_argument("--in", dest="infile", type=Path, required=True)
    c.add_argument("--assumption", choices=["simple", "known", "mean"], required=True)
    _model_flags(c)
    c.add_argument("--epsilon", type=float, default=1e-6)
    c.add_argument("--json", type=Path, help="write JSON lines here instead of stdout")
    c.add_argument("--clamp", action="store_true", help="clamp infeasible statistics instead of failing")
    c.add_argument("--threads", type=int)
    c.set_defaults(func=cmd_certify)

    e = sub.add_parser("extract", help="cutoff-optimized Toeplitz extraction")
    e.add_argument("--in", dest="infile", type=Path, required=True)
    e.add_argument("--cert", type=Path, required=True)
    e.add_argument("--delta-log2", type=float, default=DEFAULT_DELTA_LOG2)
    e.add_argument("--y-length", type=int, default=DEFAULT_Y_LENGTH)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", type=Path, required=True)
    e.add_argument("--manifest", type=Path)
    e.set_defaults(func=cmd_extract)

    o = sub.add_parser("oracle-check", help="closed forms versus brute-force oracles")
    o.add_argument("--instances", type=int, default=100)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--scope", choices=list(SCOPES), default="simple")
    o.set_defaults(func=cmd_oracle_check)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"shuttercert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"shuttercert: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"shuttercert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
