"""Command-line experiment runners.

Settings come from an optional flat ``key = value`` file and are overridden
by command-line flags.  Every output CSV ends with a ``# seed=<s>
version=<v>`` line, and each subcommand is a deterministic function of its
settings and seed.

Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import ber_16qam_approx, ber_16qam_exact, snr_from_rx1
from .channel import load_channel_csv
from .errors import DomainError, LengthError, NumericalError, ShapeError
from .experiments import (
    BER_HEADER,
    ber_sweep,
    beam_scan,
    frames_for_bits,
    noise_for_snr_rx1,
    staircase_amplitude_table,
    sweep_channel,
)
from .modulation import CONSTELLATION_HEADER, solve_constellation
from .ris_core import AmplitudePhaseProfile, load_profile_csv, triangular_profile
from .transceiver import FrameConfig, payload_from_file, random_payload, run_link, save_constellation_dump


class ConfigError(Exception):
    """Invalid or inconsistent settings."""


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    snr_db: tuple[float, ...] = tuple(float(s) for s in range(0, 25, 2))
    bits: int = 1_000_000
    q: int | None = 40
    qs: tuple[int, ...] = (40, 10)
    amp_qs: tuple[int, ...] = (2, 4, 8, 10, 16, 40)
    symbol_rate: float = 2.5e6
    r_dac: float = 100e6
    mapping: str = "compensated"
    estimation: str = "run"
    csi: str = "ls"
    channel: str | None = None
    profile: str = "ideal"
    payload: str | None = None
    panels: int = 4096
    out: str | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.snr_db:
            raise ConfigError("empty SNR grid")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ConfigError("SNR grid must be strictly increasing")
        if self.bits < 10_000:
            raise ConfigError("bits per point must be >= 10000")
        if self.q is not None and self.q < 2:
            raise ConfigError("q must be >= 2 or 'none'")

    def frame_config(self, q="default") -> FrameConfig:
        return FrameConfig(q=self.q if q == "default" else q, symbol_rate=self.symbol_rate, r_dac=self.r_dac)


def _parse_q(text: str) -> int | None:
    t = text.strip().lower()
    if t in ("none", "inf", "unbounded"):
        return None
    return int(t)


def parse_grid(text: str) -> tuple[float, ...]:
    """``"0:24:2"`` (inclusive stop) or a comma list such as ``"0,10,inf"``."""
    t = text.strip()
    if ":" in t:
        parts = [float(x) for x in t.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"bad grid range {text!r}")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(n))
    return tuple(float(x) for x in t.split(",") if x.strip())


_CONVERTERS = {
    "seed": int,
    "snr_db": parse_grid,
    "bits": lambda s: int(float(s)),
    "q": _parse_q,
    "qs": lambda s: tuple(int(x) for x in s.split(",")),
    "amp_qs": lambda s: tuple(int(x) for x in s.split(",")),
    "symbol_rate": float,
    "r_dac": float,
    "mapping": str,
    "estimation": str,
    "csi": str,
    "channel": str,
    "profile": str,
    "payload": str,
    "panels": int,
    "out": str,
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def build_config(raw: dict) -> ExperimentConfig:
    kwargs = {}
    for key, value in raw.items():
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kwargs[key] = _CONVERTERS[key](value) if isinstance(value, str) else value
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return ExperimentConfig(**kwargs)


def _footer(cfg: ExperimentConfig) -> str:
    return f"# seed={cfg.seed} version={__version__}"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".10g")


def _write_csv(path, header, rows, cfg: ExperimentConfig) -> None:
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in r])
        fh.write(_footer(cfg) + "\n")


def _out(cfg: ExperimentConfig, default: str) -> Path:
    return Path(cfg.out or default)


def _channel(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.channel is None:
        return sweep_channel(cfg.seed)
    try:
        h = load_channel_csv(cfg.channel)
    except OSError as exc:
        raise ConfigError(f"cannot read channel {cfg.channel}: {exc}") from exc
    if h.shape != (2, 2):
        raise ConfigError(f"channel must be 2x2, got {h.shape}")
    return h


def _profile(cfg: ExperimentConfig) -> AmplitudePhaseProfile:
    if cfg.profile == "ideal":
        return AmplitudePhaseProfile.ideal()
    if cfg.profile == "triangular":
        return triangular_profile()
    try:
        return load_profile_csv(cfg.profile)
    except OSError as exc:
        raise ConfigError(f"cannot read profile {cfg.profile}: {exc}") from exc


def cmd_ber_sweep(cfg: ExperimentConfig) -> Path:
    """Measured and theoretical BER against antenna-1 SNR."""
    rows = ber_sweep(
        cfg.snr_db, cfg.bits, cfg.seed, cfg.frame_config(), _channel(cfg),
        mapping=cfg.mapping, estimation=cfg.estimation, csi=cfg.csi,
    )
    path = _out(cfg, "ber_sweep.csv")
    _write_csv(path, BER_HEADER, [r.as_list() for r in rows], cfg)
    return path


def _sibling(path: Path, tag: str) -> Path:
    return path.with_name(f"{path.stem}_{tag}{path.suffix or '.csv'}")


def cmd_discretization_sweep(cfg: ExperimentConfig) -> Path:
    """|a1| against step count, then BER curves for each ``q`` in ``qs``.

    The amplitude table goes to the output path, the BER curves to a
    sibling file with a ``_ber`` suffix.
    """
    path = _out(cfg, "disc_sweep.csv")
    _write_csv(path, ["q", "a1_amplitude"], staircase_amplitude_table(cfg.amp_qs), cfg)
    h = _channel(cfg)
    rows = []
    for q in cfg.qs:
        for r in ber_sweep(
            cfg.snr_db, cfg.bits, cfg.seed, cfg.frame_config(q), h,
            mapping=cfg.mapping, estimation=cfg.estimation, stream_tag=q, csi=cfg.csi,
        ):
            rows.append([q] + r.as_list())
    _write_csv(_sibling(path, "ber"), ["q"] + BER_HEADER, rows, cfg)
    return path


def cmd_solve_mapping(cfg: ExperimentConfig) -> Path:
    """16-QAM sweep settings for an amplitude profile, with residuals."""
    solved = solve_constellation(_profile(cfg), panels=cfg.panels)
    rows = []
    for s in solved:
        rows.append([
            s.entry.symbol_index, s.entry.bits, abs(s.achieved), float(np.angle(s.achieved)) % (2 * np.pi),
            s.params.t0_frac, s.params.delta_phi, s.amp_residual, s.phase_residual,
        ])
    path = _out(cfg, "mapping.csv")
    _write_csv(path, CONSTELLATION_HEADER + ["amp_residual", "phase_residual"], rows, cfg)
    return path


def cmd_beamform_scan(cfg: ExperimentConfig) -> Path:
    """Received amplitude with and without beamforming for growing arrays."""
    res = beam_scan((1, 4, 8, 16), seed=cfg.seed)
    base = res[0][1]
    rows = [[cells, bf, rnd, bf / base] for cells, bf, rnd in res]
    path = _out(cfg, "beam_scan.csv")
    _write_csv(path, ["cells", "y_beamformed", "y_random_mean", "gain_vs_one_cell"], rows, cfg)
    return path


def cmd_predict(cfg: ExperimentConfig) -> Path:
    """Closed-form post-ZF SNRs and BERs on the SNR grid."""
    h = _channel(cfg)
    rows = []
    for snr_db in cfg.snr_db:
        snr = 10.0 ** (snr_db / 10.0)
        pair = snr_from_rx1(snr, h)
        rows.append([
            snr_db, 10 * math.log10(pair.snr1), 10 * math.log10(pair.snr2),
            ber_16qam_approx(pair.snr1), ber_16qam_approx(pair.snr2),
            ber_16qam_exact(pair.snr1), ber_16qam_exact(pair.snr2),
        ])
    path = _out(cfg, "predict.csv")
    header = ["snr_rx1_db", "snr1_db", "snr2_db", "ber_approx1", "ber_approx2", "ber_exact1", "ber_exact2"]
    _write_csv(path, header, rows, cfg)
    return path


def cmd_dump_constellation(cfg: ExperimentConfig) -> Path:
    """Equalized symbols at the first SNR of the grid."""
    fc = cfg.frame_config()
    h = _channel(cfg)
    n_frames = frames_for_bits(cfg.bits, fc)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 3]))
    if cfg.payload:
        try:
            b1, b2 = payload_from_file(cfg.payload, n_frames, fc)
        except OSError as exc:
            raise ConfigError(f"cannot read payload {cfg.payload}: {exc}") from exc
    else:
        b1, b2 = random_payload(rng, n_frames, fc)
    sigma2 = noise_for_snr_rx1(h, 1.0, cfg.snr_db[0], fc.q, cfg.mapping)
    rep = run_link(h, 1.0, sigma2, b1, b2, fc, rng, cfg.mapping, cfg.estimation, cfg.csi)
    path = _out(cfg, "constellation.csv")
    try:
        save_constellation_dump(rep, path, _footer(cfg))
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc
    return path


COMMANDS = {
    "ber-sweep": cmd_ber_sweep,
    "disc-sweep": cmd_discretization_sweep,
    "solve-map": cmd_solve_mapping,
    "beam-scan": cmd_beamform_scan,
    "predict": cmd_predict,
    "dump-constellation": cmd_dump_constellation,
}


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rismimo", description="RIS MIMO-QAM link experiments")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.splitlines()[0])
        p.add_argument("--config", help="flat key = value settings file")
        p.add_argument("--snr-db", help="grid such as 0:24:2 or 0,10,inf")
        p.add_argument("--bits", help="payload bits per SNR point")
        p.add_argument("--q", help="phase steps per symbol, or 'none'")
        p.add_argument("--seed", help="integer seed")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="any other setting")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        raw = read_config_file(args.config) if args.config else {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            raw[k.strip().replace("-", "_")] = v.strip()
        for key in ("snr_db", "bits", "q", "seed", "out"):
            value = getattr(args, key)
            if value is not None:
                raw[key] = value
        cfg = build_config(raw)
        path = COMMANDS[args.command](cfg)
    except (ConfigError, DomainError, LengthError, ShapeError) as exc:
        print(f"rismimo: config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ZeroDivisionError, FloatingPointError) as exc:
        print(f"rismimo: numerical error: {exc}", file=sys.stderr)
        return 3
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
