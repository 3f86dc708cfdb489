"""Command-line driver.

Exit codes: 0 success, 1 usage or parameter error, 2 attack reported
FAILURE, 3 I/O or format error.  Every run writes one JSON manifest: next to
``--out`` when there is one, else to ``--manifest``, else to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import attack_mitm, attack_overlay, attack_pkfree, attack_weakkey, channels, complexity, prc_io
from .report import FAILURE, AttackReport
from .scheme import (
    InvalidParams,
    PrcParams,
    PublicKey,
    Scheme,
    SecretKey,
    codewords_to_rows,
    decode,
    encode_batch,
    keygen,
    rows_to_codewords,
)

EXIT_OK, EXIT_USAGE, EXIT_FAILURE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunManifest:
    subcommand: str
    params: dict
    seed: int | None
    version: str = __version__
    started: str = ""
    finished: str = ""
    exit_code: int | None = None
    outputs: list = field(default_factory=list)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _key(path, want):
    kf = prc_io.read_key(path)
    if not isinstance(kf.key, want):
        raise prc_io.InvariantViolation(f"{path} holds a {type(kf.key).__name__}, expected {want.__name__}")
    return kf


def _emit_report(args, report: AttackReport, manifest: RunManifest) -> int:
    text = prc_io.report_json(report)
    if args.out:
        prc_io.write_report(args.out, report)
        manifest.outputs.append(str(args.out))
    print(text)
    return EXIT_FAILURE if report.status == FAILURE else EXIT_OK


# subcommands

def cmd_keygen(args, manifest):
    kw = {"r": args.r, "g": args.g}
    if args.omega is not None:
        kw["omega"] = args.omega
    params = PrcParams.for_scheme(args.scheme, args.n, args.t, **kw)
    manifest.params.update(params.as_dict())
    kp = keygen(params, args.seed)
    paths = prc_io.write_keypair(args.out, kp, args.seed)
    manifest.outputs += [str(p) for p in paths]
    print(f"wrote {paths[0]} and {paths[1]} ({params.scheme.value}, n={params.n}, r={params.r}, g={params.g}, t={params.t})")
    if kp.info:
        print(json.dumps(kp.info, default=str))
    return EXIT_OK


def cmd_encode(args, manifest):
    kf = _key(args.pk, PublicKey)
    params = kf.params if args.omega is None else kf.params.with_omega(args.omega)
    manifest.params.update(params.as_dict())
    X, _, _ = encode_batch(kf.key, params, args.count, args.seed)
    prc_io.write_codewords(args.out, rows_to_codewords(X))
    manifest.outputs.append(str(args.out))
    print(f"wrote {args.count} codewords (n={params.n}, omega={params.omega}) to {args.out}")
    return EXIT_OK


def cmd_decode(args, manifest):
    kf = _key(args.sk, SecretKey)
    cws = prc_io.read_codewords(args.inp)
    manifest.params.update(kf.params.as_dict())
    accepted = 0
    for i, c in enumerate(cws):
        v = decode(kf.key, kf.params, c)
        accepted += v.value == "ACCEPT"
        print(f"{i}\t{v.value}")
    manifest.params["accepted"] = accepted
    return EXIT_OK


def cmd_attack1(args, manifest):
    kf = _key(args.pk, PublicKey)
    p = kf.params
    cfg = attack_mitm.MitmConfig.for_params(p.n, p.r, p.t, l=args.l, tau=args.tau)
    if args.l1_size is not None:
        c1 = math.comb(attack_mitm.half_sizes(p.n)[0], attack_mitm.split_weights(p.t)[0])
        cap = min(args.l1_size, c1)
        cfg = attack_mitm.MitmConfig(cfg.l, cap, cfg.list_cap_2, cfg.tau, cap / c1, cfg.beta)
    manifest.params.update(p.as_dict(), l=cfg.l, tau=cfg.tau, list_cap_1=cfg.list_cap_1, list_cap_2=cfg.list_cap_2)
    X = codewords_to_rows(prc_io.read_codewords(args.targets))
    report = attack_mitm.run_attack1(kf.key, X, p.t, p.r, cfg, args.seed, workers=args.threads)
    return _emit_report(args, report, manifest)


def cmd_attack2(args, manifest):
    files = sorted(Path(args.pk_dir).glob("*.pk"))
    if not files:
        raise prc_io.LengthMismatch(f"no .pk files in {args.pk_dir}")
    keys = [_key(f, PublicKey) for f in files]
    tau = attack_weakkey.default_tau(keys[0].params.t) if args.tau is None else args.tau
    manifest.params.update(keys=len(keys), tau=tau, pk_dir=str(args.pk_dir))
    X = codewords_to_rows(prc_io.read_codewords(args.targets))
    report = attack_weakkey.run_attack2([k.key for k in keys], X, tau, args.seed)
    if report.counters.get("weak_key_index") is not None:
        report.details["weak_key_file"] = str(files[report.counters["weak_key_index"]])
    return _emit_report(args, report, manifest)


def cmd_attack3(args, manifest):
    kf = _key(args.pk, PublicKey)
    params = kf.params if args.omega is None else kf.params.with_omega(args.omega)
    cws = prc_io.read_codewords(args.target)
    if len(cws) != 1:
        raise prc_io.InvariantViolation(f"{args.target} holds {len(cws)} codewords, expected 1")
    cfg = attack_overlay.OverlayConfig.for_params(params, args.mu, args.max_iters)
    manifest.params.update(params.as_dict(), mu=cfg.mu, max_iters=cfg.max_iters)
    report, outcome = attack_overlay.run_attack3(kf.key, params, cws[0], cfg, args.seed, workers=args.threads)
    if outcome is not None:
        if args.out_codeword:
            prc_io.write_codewords(args.out_codeword, [outcome.codeword])
            manifest.outputs.append(str(args.out_codeword))
        if args.sk:
            sk = _key(args.sk, SecretKey)
            report.details["decode_attacked"] = decode(sk.key, sk.params, outcome.codeword).value
            report.details["decode_original"] = decode(sk.key, sk.params, cws[0]).value
    return _emit_report(args, report, manifest)


def cmd_attack4(args, manifest):
    cws = prc_io.read_codewords(args.targets)
    X = codewords_to_rows(cws)
    n = X.shape[1]
    est = args.omega is None
    omega = attack_pkfree.estimate_omega(attack_pkfree.pairwise_differences(X)) if est else args.omega
    m = X.shape[0] // 2
    cfg = attack_pkfree.PkFreeConfig(
        m=m,
        n_times=attack_pkfree.default_n_times(n, args.weight) if args.n_times is None else args.n_times,
        tau1=attack_pkfree.tau1(omega, args.weight) if args.tau1 is None else args.tau1,
        tau2=args.tau2,
        weight=args.weight,
    )
    manifest.params.update(n=n, m=m, n_times=cfg.n_times, tau1=cfg.tau1, tau2=cfg.tau2, weight=cfg.weight, omega=omega)
    report = attack_pkfree.run_attack4(X[: 2 * m], cfg, args.seed, omega_estimated=est)
    return _emit_report(args, report, manifest)


def cmd_estimate(args, manifest):
    scheme = Scheme(args.scheme)
    lo_def, hi_def = complexity.LLM_T_RANGE if scheme is Scheme.LLM else complexity.GIM_T_RANGE
    lo = lo_def if args.t_min is None else args.t_min
    hi = hi_def if args.t_max is None else args.t_max
    manifest.params.update(scheme=scheme.value, t_min=lo, t_max=hi, n=args.n)
    rows = complexity.emit_table(scheme, (lo, hi), args.n)
    text = prc_io.table_csv(rows) if args.format == "csv" else prc_io.table_json(rows) + "\n"
    if args.out:
        prc_io.write_table(args.out, rows, args.format)
        manifest.outputs.append(str(args.out))
    sys.stdout.write(text)
    return EXIT_OK


def cmd_advise(args, manifest):
    manifest.params.update(scheme=args.scheme, bits=args.bits)
    adv = complexity.advise_parameters(args.scheme, args.bits)
    top = adv.exponent_range[1]
    for row in adv.per_t:
        partial = row["partial_suggestion"] or f"not reached by 2^{top}"
        both = row["suggestion"] or f"not reached by 2^{top}"
        print(f"t={row['t']}: partial recovery {partial}; all attacks {both}")
    if adv.overlay_min_exponent is not None:
        print(f"overlay: n > 2^{adv.overlay_min_exponent - 1}")
    for note in adv.notes:
        print(f"note: {note}")
    if args.out:
        Path(args.out).write_text(json.dumps(adv.as_dict(), indent=2, default=str) + "\n")
        manifest.outputs.append(str(args.out))
    return EXIT_OK


def cmd_simulate(args, manifest):
    if args.channel == "llm":
        kappa = args.entropy
        if args.flip_rate is not None:
            kappa = channels.kappa_for_flip_rate(args.flip_rate)
        res = channels.simulate("llm", args.n, args.seed, kappa=kappa, vocab_bits=args.vocab_bits)
    else:
        std = args.noise_std
        if args.flip_rate is not None:
            std = channels.noise_std_for_flip_rate(args.flip_rate)
        res = channels.simulate("gim", args.n, args.seed, sigma=args.sigma, noise_std=std)
    manifest.params.update({k: v for k, v in res.items() if k not in ("flip_rate",)})
    text = json.dumps(res, indent=2, default=str)
    if args.out:
        Path(args.out).write_text(text + "\n")
        manifest.outputs.append(str(args.out))
    print(text)
    return EXIT_OK


def _unit_interval(s: str) -> float:
    v = float(s)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"{s} is outside [0, 1]")
    return v


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{s} is not a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    ap = _Parser(prog="prcbreak", description="Keys, codewords and attacks on LDPC-based pseudorandom codes.",
                 formatter_class=fmt)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_, formatter_class=fmt)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=0, help="seed for every random draw")
        p.add_argument("--manifest", type=Path, default=None,
                       help="manifest path (default: <out>.manifest.json, or stderr without --out)")
        return p

    p = add("keygen", cmd_keygen, "generate a key pair into <out>.pk and <out>.sk")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default="llm", help="key generator")
    p.add_argument("--n", type=_positive_int, required=True, help="code length")
    p.add_argument("--t", type=int, default=3, help="row weight of the parity checks")
    p.add_argument("--omega", type=_unit_interval, default=None,
                   help="encoder noise rate stored in the key (default: 0, or eta for gim)")
    p.add_argument("--r", type=int, default=None, help="parity rows (default: floor(0.99 n), or the gim layout)")
    p.add_argument("--g", type=int, default=None, help="generator columns (default: the security parameter)")
    p.add_argument("--out", type=Path, required=True, help="output path stem")

    p = add("encode", cmd_encode, "encode random messages with a public key")
    p.add_argument("--pk", type=Path, required=True, help="public key file")
    p.add_argument("--count", type=_positive_int, default=1, help="number of codewords")
    p.add_argument("--omega", type=_unit_interval, default=None, help="noise rate (default: the key's omega)")
    p.add_argument("--out", type=Path, required=True, help="codeword file")

    p = add("decode", cmd_decode, "decode codewords with a secret key, one verdict per line")
    p.add_argument("--sk", type=Path, required=True, help="secret key file")
    p.add_argument("--in", dest="inp", type=Path, required=True, help="codeword file")
    p.set_defaults(out=None)

    p = add("attack1", cmd_attack1, "recover weight-t duals by meet-in-the-middle and test targets")
    p.add_argument("--pk", type=Path, required=True, help="public key file")
    p.add_argument("--targets", type=Path, required=True, help="codeword file")
    p.add_argument("--l", type=float, default=8.0, help="expected secret rows among recovered duals")
    p.add_argument("--l1-size", type=_positive_int, default=None, help="override the first list cap")
    p.add_argument("--tau", type=float, default=None, help="zero-ratio threshold (default: 0.60 for t<=3, else 0.55)")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker threads for the join")
    p.add_argument("--out", type=Path, default=None, help="report JSON")

    p = add("attack2", cmd_attack2, "scan public keys for duplicated rows and test targets on the weak one")
    p.add_argument("--pk-dir", type=Path, required=True, help="directory of .pk files")
    p.add_argument("--targets", type=Path, required=True, help="codeword file for the weak key")
    p.add_argument("--tau", type=float, default=None, help="agreement threshold (default: 0.60 for t<=3, else 0.65)")
    p.add_argument("--out", type=Path, default=None, help="report JSON")

    p = add("attack3", cmd_attack3, "recover the noise by ISD and overlay disjoint noise")
    p.add_argument("--pk", type=Path, required=True, help="public key file")
    p.add_argument("--target", type=Path, required=True, help="file holding one codeword")
    p.add_argument("--mu", type=_unit_interval, default=None, help="overlay rate (default: midpoint of the gap)")
    p.add_argument("--omega", type=_unit_interval, default=None, help="assumed noise rate (default: the key's)")
    p.add_argument("--max-iters", type=_positive_int, default=10_000, help="ISD iteration budget")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker threads for ISD trials")
    p.add_argument("--sk", type=Path, default=None, help="secret key used only to grade the result")
    p.add_argument("--out-codeword", type=Path, default=None, help="where to write the attacked codeword")
    p.add_argument("--out", type=Path, default=None, help="report JSON")

    p = add("attack4", cmd_attack4, "public-key-free detection from 2m codewords")
    p.add_argument("--targets", type=Path, required=True, help="codeword file with 2m codewords")
    p.add_argument("--weight", type=int, default=3, help="guess weight (2 finds duplicated rows)")
    p.add_argument("--n-times", type=_positive_int, default=None, help="guesses (default: 3 C(n,w) / floor(0.99 n))")
    p.add_argument("--omega", type=_unit_interval, default=None, help="noise rate (default: estimated)")
    p.add_argument("--tau1", type=float, default=None, help="per-guess zero threshold (default: from omega)")
    p.add_argument("--tau2", type=int, default=0, help="hits needed beyond which the verdict is positive")
    p.add_argument("--out", type=Path, default=None, help="report JSON")

    p = add("estimate", cmd_estimate, "attack cost table")
    p.add_argument("--scheme", choices=["llm", "gim"], default="llm", help="parameter layout")
    p.add_argument("--t-min", type=int, default=None, help="first t (default: 3)")
    p.add_argument("--t-max", type=int, default=None, help="last t (default: 14 for llm, 7 for gim)")
    p.add_argument("--n", type=_positive_int, default=None, help="code length (default: 2^17 llm, 2^14 gim)")
    p.add_argument("--format", choices=["csv", "json"], default="csv", help="output format")
    p.add_argument("--out", type=Path, default=None, help="table file")

    p = add("advise", cmd_advise, "smallest code length lifting each attack above a security target")
    p.add_argument("--scheme", choices=["llm", "gim"], default="llm", help="parameter layout")
    p.add_argument("--bits", type=float, default=128.0, help="security target in bits")
    p.add_argument("--out", type=Path, default=None, help="advisory JSON")

    p = add("simulate", cmd_simulate, "push a random codeword through a simulated channel")
    p.add_argument("--channel", choices=["llm", "gim"], required=True, help="channel model")
    p.add_argument("--n", type=_positive_int, default=16384, help="codeword length")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--entropy", type=float, default=math.inf, help="llm: Beta concentration (inf is noiseless)")
    g.add_argument("--flip-rate", type=float, default=None, help="calibrate the channel to this flip rate")
    p.add_argument("--vocab-bits", type=_positive_int, default=16, help="llm: bits per token")
    p.add_argument("--sigma", type=float, default=1.0, help="gim: error calibration factor")
    p.add_argument("--noise-std", type=float, default=0.0, help="gim: inversion noise std")
    p.add_argument("--out", type=Path, default=None, help="summary JSON")
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    resolved = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k not in ("func", "manifest")}
    manifest = RunManifest(args.command, {"argv": resolved}, args.seed, started=_now())
    try:
        code = args.func(args, manifest)
    except prc_io.FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        code = EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        code = EXIT_IO
    except (InvalidParams, ValueError) as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    manifest.finished = _now()
    manifest.exit_code = code
    _write_manifest(args, manifest)
    return code


def _write_manifest(args, manifest: RunManifest) -> None:
    text = json.dumps(asdict(manifest), indent=2, default=_json_default)
    target = args.manifest
    out = getattr(args, "out", None)
    if target is None and out is not None:
        target = Path(str(out) + ".manifest.json")
    if target is None:
        print(text, file=sys.stderr)
        return
    try:
        Path(target).write_text(text + "\n")
    except OSError as exc:
        print(f"could not write manifest {target}: {exc}", file=sys.stderr)


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    return str(v)


if __name__ == "__main__":
    sys.exit(main())
