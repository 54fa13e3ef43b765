"""Command-line surface: solve | sweep | oracle | verify | simulate | embed | extract.

Configuration is a single flat JSON object with exactly the run-config keys
(p0, p1, init0, gamma, b, b_min, b_max, steps, seed, out); unknown keys are
an error so typos fail loudly.  Every command is deterministic given the
config plus seed, and floating-point output is printed with 12 significant
digits so reruns produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import struct
import sys
import zlib
from pathlib import Path
from typing import Any, Optional

from .codec import BitStream, ChainProvider, DecodeError, embed, extract
from .model import ChainParams, canonicalize, uncanonicalize
from .oracle import grid_search, kkt_verify
from .simulate import estimate_discounted
from .solver import UnsupportedShapeError, optimal_policy

__all__ = ["main"]

_CONFIG_KEYS = {
    "p0", "p1", "init0", "gamma", "b", "b_min", "b_max", "steps", "seed", "out",
}
_REQUIRED_KEYS = {"p0", "p1", "init0", "gamma"}
_FRAME_HEADER_BITS = 64


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _load_config(path: str) -> dict[str, Any]:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise UsageError("config must be a flat JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    missing = _REQUIRED_KEYS - set(raw)
    if missing:
        raise UsageError(f"missing config keys: {sorted(missing)}")
    return raw


def _params_of(config: dict[str, Any]) -> ChainParams:
    try:
        return ChainParams(
            p0=float(config["p0"]),
            p1=float(config["p1"]),
            init0=float(config["init0"]),
            gamma=float(config["gamma"]),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid chain parameters: {exc}") from exc


def _budget_of(config: dict[str, Any]) -> float:
    if "b" not in config:
        raise UsageError("this command needs a budget key 'b' in the config")
    b = float(config["b"])
    if b < 0.0:
        raise UsageError(f"budget must be nonnegative, got {b}")
    return b


def _round_floats(obj: Any) -> Any:
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def _emit(record: dict[str, Any], out: Optional[str]) -> None:
    text = json.dumps(_round_floats(record), indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if out:
        Path(out).write_text(text)


def _solution_record(params: ChainParams, b: float) -> dict[str, Any]:
    sol = optimal_policy(params, b)
    record = {
        "a0": sol.policy.a0,
        "a1": sol.policy.a1,
        "d0": sol.occupancy.d0,
        "d1": sol.occupancy.d1,
        "regime": sol.regime.value,
        "reward_bits": sol.reward,
        "cost": sol.cost,
        "method": sol.method.value,
        "shape": canonicalize(params).shape.value,
    }
    if sol.thresholds is not None:
        record["b_low"] = sol.thresholds.b_low
        record["b_high"] = sol.thresholds.b_high
    return record


def cmd_solve(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    params = _params_of(config)
    b = _budget_of(config)
    _emit(_solution_record(params, b), args.out or config.get("out"))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    params = _params_of(config)
    for key in ("b_min", "b_max", "steps"):
        if key not in config:
            raise UsageError(f"sweep needs config key {key!r}")
    b_min, b_max = float(config["b_min"]), float(config["b_max"])
    steps = int(config["steps"])
    if steps < 2 or b_min < 0.0 or b_max < b_min:
        raise UsageError("sweep needs b_max >= b_min >= 0 and steps >= 2")

    budgets = [b_min + (b_max - b_min) * i / (steps - 1) for i in range(steps)]
    first = optimal_policy(params, b_min)
    if first.thresholds is not None:
        for edge in (first.thresholds.b_low, first.thresholds.b_high):
            if b_min <= edge <= b_max:
                budgets.append(edge)
    budgets = sorted(set(budgets))

    out = args.out or config.get("out")
    rows = []
    for b in budgets:
        sol = optimal_policy(params, b)
        rows.append(
            [
                _fmt(b),
                _fmt(sol.policy.a0),
                _fmt(sol.policy.a1),
                _fmt(sol.occupancy.d0),
                _fmt(sol.occupancy.d1),
                _fmt(sol.reward),
                _fmt(sol.cost),
                sol.regime.value,
            ]
        )
    header = ["b", "a0", "a1", "d0", "d1", "reward_bits", "cost", "regime"]
    if out:
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    params = _params_of(config)
    b = _budget_of(config)
    result = grid_search(params, b, step=args.grid_step)
    _emit(
        {
            "a0": result.policy.a0,
            "a1": result.policy.a1,
            "reward_bits": result.reward,
            "cost": result.cost,
            "grid_step": args.grid_step,
        },
        args.out or config.get("out"),
    )
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    params = _params_of(config)
    b = _budget_of(config)
    sol = optimal_policy(params, b)
    canon = canonicalize(params)
    try:
        report = kkt_verify(canon.params, b, uncanonicalize(sol.policy, canon))
    except UnsupportedShapeError as exc:
        sys.stderr.write(f"verify: {exc}\n")
        return 1
    _emit(
        {
            "passed": report.passed,
            "regime": report.regime.value,
            "multipliers": {
                "lambda": report.lam,
                "alpha0": report.alpha0,
                "alpha1": report.alpha1,
                "beta0": report.beta0,
                "beta1": report.beta1,
                "omega0": report.omega0,
                "omega1": report.omega1,
                "nu0": report.nu0,
                "nu1": report.nu1,
                "mu0": report.mu0,
                "mu1": report.mu1,
            },
            "c0": report.c0,
            "c1": report.c1,
            "stationarity": list(report.stationarity),
            "cs_products": list(report.cs_products),
            "feasibility": dict(report.feasibility),
        },
        args.out or config.get("out"),
    )
    return 0 if report.passed else 1


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    params = _params_of(config)
    b = _budget_of(config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    sol = optimal_policy(params, b)
    record: dict[str, Any] = {"a0": sol.policy.a0, "a1": sol.policy.a1}
    analytic = {
        "reward": sol.reward,
        "cost": sol.cost,
        "visitation": sol.occupancy.d0,
    }
    for i, kind in enumerate(("reward", "cost", "visitation")):
        report = estimate_discounted(
            params,
            sol.policy,
            kind,  # type: ignore[arg-type]
            args.rollouts,
            seed + i,
            state=0 if kind == "visitation" else None,
        )
        record[kind] = {
            "mean": report.mean,
            "stderr": report.stderr,
            "analytic": analytic[kind],
            "n_rollouts": report.n_rollouts,
            "horizon": report.horizon,
            "seed": report.seed,
        }
    _emit(record, args.out or config.get("out"))
    return 0


def _frame_message(payload: bytes, nbits: int) -> BitStream:
    """Self-delimiting frame: 32-bit payload bit length + 32-bit checksum."""
    nbytes = (nbits + 7) // 8
    trimmed = bytearray(payload[:nbytes])
    if nbits % 8 and trimmed:
        trimmed[-1] &= 0xFF << (8 - nbits % 8)
    header = struct.pack(">II", nbits, zlib.crc32(bytes(trimmed)) & 0xFFFFFFFF)
    header_bits = BitStream.from_bytes(header)
    return BitStream.from_bytes(
        bytes(header_bits.data) + bytes(trimmed),
        _FRAME_HEADER_BITS + nbits,
    )


def _deframe_bits(bits: BitStream) -> tuple[bytes, int]:
    if bits.nbits < _FRAME_HEADER_BITS:
        raise DecodeError(
            f"only {bits.nbits} bits recovered, not enough for the frame header"
        )
    header = bits.data[:8]
    nbits, checksum = struct.unpack(">II", header)
    if bits.nbits < _FRAME_HEADER_BITS + nbits:
        raise DecodeError(
            f"frame declares {nbits} payload bits but only "
            f"{bits.nbits - _FRAME_HEADER_BITS} were recovered; increase n-tokens"
        )
    payload_bits = [bits.bit(_FRAME_HEADER_BITS + i) for i in range(nbits)]
    payload = BitStream.from_bits(payload_bits).data
    if zlib.crc32(payload) & 0xFFFFFFFF != checksum:
        raise DecodeError(
            "payload checksum mismatch: embed and extract configs differ"
        )
    return payload, nbits


def _provider_for(params: ChainParams, b: float) -> ChainProvider:
    sol = optimal_policy(params, b)
    return ChainProvider(sol.policy, params)


def cmd_embed(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    params = _params_of(config)
    b = _budget_of(config)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    payload = Path(args.message).read_bytes()
    nbits = args.message_bits if args.message_bits is not None else 8 * len(payload)
    if nbits > 8 * len(payload):
        raise UsageError("message-bits exceeds the message file size")
    framed = _frame_message(payload, nbits)
    provider = _provider_for(params, b)
    result = embed(framed, provider, args.n_tokens, pad_seed=seed)
    out = args.out or config.get("out")
    if not out:
        raise UsageError("embed needs --out for the token file")
    Path(out).write_text("".join(f"{t}\n" for t in result.tokens))
    summary = {
        "n_tokens": args.n_tokens,
        "message_bits": nbits,
        "framed_bits": framed.nbits,
        "consumed": result.consumed,
        "rate_bits_per_token": result.consumed / args.n_tokens,
        "pad_seed": result.pad_seed,
        "complete": result.consumed >= framed.nbits,
    }
    sys.stdout.write(json.dumps(_round_floats(summary), indent=2, sort_keys=True) + "\n")
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    params = _params_of(config)
    b = _budget_of(config)
    tokens = [
        int(line) for line in Path(args.tokens).read_text().split() if line.strip()
    ]
    provider = _provider_for(params, b)
    try:
        bits = extract(tokens, provider)
        payload, nbits = _deframe_bits(bits)
    except DecodeError as exc:
        sys.stderr.write(f"extract: {exc}\n")
        return 1
    out = args.out or config.get("out")
    if out:
        Path(out).write_bytes(payload)
    summary = {"payload_bits": nbits, "payload_bytes": len(payload), "checksum_ok": True}
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stegopolicy",
        description="Budgeted entropy-maximizing policies for a two-state chain, "
        "with verification, simulation, and an embed/extract codec.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="flat JSON run config")
        p.add_argument("--out", default=None, help="output file path")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("solve", help="closed-form optimal policy")
    common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("sweep", help="policy curve over a budget range (CSV)")
    common(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("oracle", help="brute-force grid-search optimum")
    common(p)
    p.add_argument("--grid-step", type=float, default=1e-3)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("verify", help="KKT certificate for the solved policy")
    common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("simulate", help="Monte-Carlo check of analytic values")
    common(p)
    p.add_argument("--rollouts", type=int, default=10_000)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("embed", help="embed a message file into tokens")
    common(p)
    p.add_argument("--message", required=True, help="raw-byte message file")
    p.add_argument("--n-tokens", type=int, required=True)
    p.add_argument("--message-bits", type=int, default=None)
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("extract", help="recover a message from a token file")
    common(p)
    p.add_argument("--tokens", required=True, help="token file, one id per line")
    p.set_defaults(fn=cmd_extract)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
