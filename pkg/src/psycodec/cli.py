"""Command-line surface: encode, decode, analyze, stimulus, verify and
the calibration service.

Exit codes: 0 success, 2 usage, 3 WAV format, 4 stream format,
5 domain/signal, 6 coefficient overload, 7 internal.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import codec, config as configmod, container, dense_oracle
from .calib import CalibrationServer
from .errors import (DomainError, OverloadError, PsycodecError, SignalError,
                     StreamFormatError, WavFormatError)
from .grid import PhaseSymbol
from .psycho import build_masking, stimulus

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_WAV = 3
EXIT_STREAM = 4
EXIT_DOMAIN = 5
EXIT_OVERLOAD = 6
EXIT_INTERNAL = 7


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="psycodec",
                                description="phase-space perceptual audio codec")
    sub = p.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode WAV to a .psc stream")
    enc.add_argument("input")
    enc.add_argument("output")
    enc.add_argument("--config", default=None)
    enc.add_argument("--noisy", action="store_true",
                     help="noisy-signal mode: store only the key")

    dec = sub.add_parser("decode", help="decode a .psc stream to WAV")
    dec.add_argument("input")
    dec.add_argument("output")

    ana = sub.add_parser("analyze", help="perceptual/noise entropy report")
    ana.add_argument("input")
    ana.add_argument("--config", default=None)
    ana.add_argument("--csv", default=None, help="write the per-time series here")

    stim = sub.add_parser("stimulus", help="emit the masking-test stimulus")
    stim.add_argument("input")
    stim.add_argument("output")
    stim.add_argument("--alpha", type=float, required=True)
    stim.add_argument("--seed", type=int, default=0)
    stim.add_argument("--config", default=None)

    ver = sub.add_parser("verify", help="run the dense-oracle check suite")
    ver.add_argument("--sizes", default="256,1024")

    cal = sub.add_parser("calibrate", help="threshold calibration service")
    calsub = cal.add_subparsers(dest="calibrate_command", required=True)
    serve = calsub.add_parser("serve")
    serve.add_argument("--corpus", required=True)
    serve.add_argument("--port", type=int, default=8321)
    serve.add_argument("--config", default="psycodec.conf")
    serve.add_argument("--ui-dir", default=None)
    serve.add_argument("--seed", type=int, default=0)
    serve.add_argument("--start-alpha", type=float, default=0.5)
    serve.add_argument("--reversals", type=int, default=8)
    return p


def cmd_encode(args) -> int:
    cfg = configmod.load_config(args.config)
    params = configmod.masking_params(cfg)
    econf = configmod.encode_config(cfg)
    signal, rate = container.read_wav(args.input)
    model = build_masking(signal, rate, params)
    if args.noisy:
        stream = codec.encode_noisy(signal, model, econf)
    else:
        stream = codec.encode(signal, model, econf)
    Path(args.output).write_bytes(container.write_stream(stream))
    return EXIT_OK


def cmd_decode(args) -> int:
    stream = container.read_stream(Path(args.input).read_bytes())
    out = codec.decode(stream)
    container.write_wav(out, stream.header.sample_rate, args.output)
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = configmod.load_config(args.config)
    params = configmod.masking_params(cfg)
    signal, rate = container.read_wav(args.input)
    model = build_masking(signal, rate, params)
    pe = codec.perceptual_entropy(signal, model)
    ne = codec.noise_entropy(model)
    n = signal.size
    print(f"samples: {n}  rate: {rate} Hz  duration: {n / rate:.2f} s")
    print(f"perceptual entropy (uniform law): {pe.mean_bits_uniform:.3f} bits/sample")
    print(f"perceptual entropy (gaussian law): {pe.mean_bits_gauss:.3f} bits/sample")
    print(f"noise entropy (phase-space log2 M integral): {ne:.1f} bits total "
          f"({ne / n:.3f} bits/sample)")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("time_s,sigma2,bits_uniform,bits_gauss\n")
            for row in zip(pe.times, pe.sigma2, pe.bits_uniform, pe.bits_gauss):
                fh.write("%.6f,%.8g,%.5f,%.5f\n" % row)
        print(f"wrote {args.csv}")
    return EXIT_OK


def cmd_stimulus(args) -> int:
    cfg = configmod.load_config(args.config)
    params = configmod.masking_params(cfg)
    signal, rate = container.read_wav(args.input)
    model = build_masking(signal, rate, params)
    out, headroom = stimulus(signal, model, args.alpha, args.seed)
    container.write_wav(out, rate, args.output)
    print(f"alpha={args.alpha} seed={args.seed} headroom={headroom:.6g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    rng = np.random.default_rng(0)
    failed = False
    for n in sizes:
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        op = dense_oracle.DenseOperator((a + a.conj().T) / 2)
        sym = dense_oracle.weyl_symbol(op)
        back = dense_oracle.inverse_weyl(sym)
        rt = np.abs(back.matrix - op.matrix).max() / np.abs(op.matrix).max()
        b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        opb = dense_oracle.DenseOperator((b + b.conj().T) / 2)
        tr_direct = dense_oracle.trace_pair(op, opb)
        tr_sym = dense_oracle.trace_pair_symbol(op, opb)
        tr_err = abs(tr_direct - tr_sym) / abs(tr_direct)
        psi = rng.normal(size=n)
        w = dense_oracle.wigner(psi)
        tm = dense_oracle.wigner_time_marginal(w)
        m_err = np.abs(tm - psi ** 2).max() / (psi ** 2).max()
        print(f"n={n}: weyl round trip {rt:.2e}  traciality {tr_err:.2e}  "
              f"wigner marginal {m_err:.2e}")
        failed |= rt > 1e-10 or tr_err > 1e-8 or m_err > 1e-8

        print(f"n={n}: sofoo sqrt errors by planck product:")
        prev = None
        for planck in (10, 40, 160):
            err, actual = _sofoo_error(n, planck)
            mono = "" if prev is None else ("  (down)" if err < prev else "  (UP)")
            print(f"    2 pi a_t a_f ~ {actual:7.1f}: max rel {err:.2e}{mono}")
            if prev is not None and err >= prev:
                failed = True
            if abs(actual - 40) < 10 and err > 0.05:
                failed = True
            prev = err
    print("verify:", "FAIL" if failed else "ok")
    return EXIT_INTERNAL if failed else EXIT_OK


def _sofoo_error(n: int, planck: float, eps: float = 0.4):
    """Max relative error of sqrt(symbol) against the symbol of the exact
    operator square root, on a bounded-variation test field."""
    target = n / (2 * np.pi * eps ** 2 * planck)
    qf = max(2, 2 * int(round(np.sqrt(target) / 2)))
    qt = max(1, int(round(target / qf)))
    grid = dense_oracle.oracle_grid(n)
    tau = np.arange(grid.n_time) / 2.0
    f = np.arange(grid.n_freq) / grid.n_freq
    T, F = np.meshgrid(tau, f, indexing="ij")
    m = n // 8
    w = np.ones(grid.n_time)
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(2 * m) / (2 * m))
    w[:2 * m] = ramp
    w[-2 * m:] = ramp[::-1]
    field = np.exp(eps * np.cos(2 * np.pi * qt * T / n)
                   * np.cos(2 * np.pi * qf * F) * w[:, None])
    sym = PhaseSymbol(grid, field, check=False)
    op = dense_oracle.inverse_weyl(sym)
    root = dense_oracle.matrix_function(op, np.sqrt)
    s_root = dense_oracle.weyl_symbol(root)
    ref = np.sqrt(field)
    margin = 2 * m + 8
    rows = np.arange(margin, grid.n_time - margin)
    rows = rows[rows % 2 == 0]
    rel = np.abs(s_root.values[rows] - ref[rows]) / ref[rows]
    at = n / (2 * np.pi * eps * qt)
    af = 1.0 / (2 * np.pi * eps * qf)
    return float(rel.max()), 2 * np.pi * at * af


def cmd_calibrate(args) -> int:
    cfg_params = configmod.masking_params(configmod.load_config(args.config))
    server = CalibrationServer(
        corpus_dir=args.corpus, params=cfg_params, config_path=args.config,
        port=args.port, seed=args.seed, ui_dir=args.ui_dir,
        start_alpha=args.start_alpha, reversals=args.reversals)
    print(f"calibration service on http://127.0.0.1:{server.port}/ "
          f"({len(server.items)} corpus items)")
    server.serve_forever()
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "encode": cmd_encode,
        "decode": cmd_decode,
        "analyze": cmd_analyze,
        "stimulus": cmd_stimulus,
        "verify": cmd_verify,
        "calibrate": cmd_calibrate,
    }[args.command]
    try:
        return handler(args)
    except WavFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WAV
    except StreamFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STREAM
    except OverloadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERLOAD
    except (DomainError, SignalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except PsycodecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
