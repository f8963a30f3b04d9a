#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
chaos-trng - 命令行版本

每个实验对应一个子命令；所有输出文件都是 (子命令, 参数, 主种子) 的确定性函数，
并在旁边写出可重放的运行清单。
"""

import argparse
import json
import os
import sys
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..core.analysis import (
    SCAN_DITHER, bifurcation_scan, check_bifurcation_regimes, confinement_probe, estimate_lyapunov,
    interior_start,
)
from ..core.errors import ChaosTRNGError, EscapeError, OutputError, UsageError
from ..core.lab_core import CONFIG, LabCore, RunManifest, derive_seed, load_config, manifest_path_for
from ..core.localization import init_localization, t
from ..core.maps import (
    SEED_LIMIT, EscapePolicy, MapKind, OrbitConfig, dither_generator, iterate_orbit,
)
from ..core.trng import (
    BLOCK_BITS_CHOICES, BitStream, PartitionRule, TestReport, TestStatus, extract_bits,
    read_bits_file, run_suite, write_bits_file,
)
from .outputs import format_bifurcation_csv, format_orbit_csv, render_pgm, write_bytes, write_text

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_SUITE_FAIL = 3

# 只影响日志和提示语言的参数，不写入清单的 argv
_SIDE_OPTIONS = {"--log-dir": True, "--lang": True, "--no-log": False, "--manifest": True}

_MAP_PRESETS = {
    "tent": MapKind.tent,
    "bernoulli": MapKind.bernoulli,
    "modtent": MapKind.modified_tent,
}


class LabArgumentParser(argparse.ArgumentParser):
    """参数错误抛出 UsageError 而不是直接退出进程"""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def parse_map_selector(selector: str, escape_study: bool = False) -> MapKind:
    """
    解析 --map 选择器：tent | bernoulli | modtent | mirror | gen:<m>
    """
    name = selector.strip().lower()
    if name in _MAP_PRESETS:
        return _MAP_PRESETS[name]()
    if name == "mirror":
        return MapKind.generalized(2.0, escape_study=escape_study)
    if name.startswith("gen:"):
        try:
            m = float(name[4:])
        except ValueError:
            raise UsageError(f"cannot parse slope in map selector {selector!r}") from None
        return MapKind.generalized(m, escape_study=escape_study)
    raise UsageError(f"unknown map selector {selector!r} (tent, bernoulli, modtent, mirror, gen:<m>)")


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed: {text!r}") from None
    if not 0 <= value < SEED_LIMIT:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {text}")
    return value


def _lags(text: str) -> Tuple[int, ...]:
    try:
        lags = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid lag list: {text!r}") from None
    if not lags or min(lags) < 1:
        raise argparse.ArgumentTypeError("lags must be positive integers")
    return lags


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, (OutputError, OSError)):
        return EXIT_IO
    return EXIT_USAGE


def strip_side_options(argv: Sequence[str]) -> List[str]:
    """去掉不影响输出的参数，得到用于重放的 argv"""
    out: List[str] = []
    skip = False
    for arg in argv:
        if skip:
            skip = False
            continue
        name = arg.split("=", 1)[0]
        if name in _SIDE_OPTIONS:
            skip = _SIDE_OPTIONS[name] and "=" not in arg
            continue
        out.append(arg)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = LabArgumentParser(add_help=False)
    common.add_argument("--config", help="config.ini with a [General] section")
    common.add_argument("--log-dir", help="directory for error and experiment logs")
    common.add_argument("--no-log", action="store_true", help="do not write log files")
    common.add_argument("--lang", help="message language (en, zh_CN)")
    common.add_argument("--seed", type=_seed, help="64-bit master seed")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--manifest", help="write the run manifest to this path")

    map_opts = LabArgumentParser(add_help=False)
    map_opts.add_argument("--map", default="modtent", help="tent | bernoulli | modtent | mirror | gen:<m>")
    map_opts.add_argument("--slope-error", type=float, default=0.0, help="multiplicative slope error")
    map_opts.add_argument("--offset", type=float, default=0.0, help="additive output offset")
    map_opts.add_argument("--saturation", type=float, nargs=2, metavar=("LO", "HI"),
                          help="clamp map output to [LO, HI]")
    map_opts.add_argument("--escape-study", action="store_true", help="allow non-confined slopes")
    map_opts.add_argument("--policy", choices=[p.value for p in EscapePolicy], default="halt")
    map_opts.add_argument("--x0", type=float, help="initial state (default: random interior point)")
    map_opts.add_argument("--dither", type=float, help="dither half-width")

    parser = LabArgumentParser(prog="chaos-trng", description="Modified tent map chaos laboratory and TRNG")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("orbit", parents=[common, map_opts], help="iterate a map and write step,x CSV")
    p.add_argument("--steps", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bifurcate", parents=[common], help="bifurcation scan of the slope-m family")
    p.add_argument("--m-lo", type=float, default=-3.0)
    p.add_argument("--m-hi", type=float, default=3.0)
    p.add_argument("--n-m", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--transient", type=int)
    p.add_argument("--keep", type=int)
    p.add_argument("--x0", type=float)
    p.add_argument("--dither", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--pgm")

    p = sub.add_parser("lyapunov", parents=[common, map_opts], help="estimate the Lyapunov exponent")
    p.add_argument("--steps", type=int)
    p.add_argument("--transient", type=int)

    p = sub.add_parser("bits", parents=[common, map_opts], help="generate a bit stream")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--format", choices=["packed", "ascii"], default="packed")
    p.add_argument("--threshold", type=float)
    p.add_argument("--out", required=True)

    p = sub.add_parser("test", parents=[common, map_opts], help="run the randomness test suite")
    p.add_argument("--input", help="bits file (otherwise bits are generated from --map)")
    p.add_argument("--format", choices=["packed", "ascii"], default="packed")
    p.add_argument("--length", type=int, help="bit length of a packed input file")
    p.add_argument("--count", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lags", type=_lags, default=(1,))
    p.add_argument("--block-bits", type=int, choices=list(BLOCK_BITS_CHOICES))

    p = sub.add_parser("confine", parents=[common, map_opts], help="count escapes from random interior seeds")
    p.add_argument("--trials", type=int)
    p.add_argument("--steps", type=int)

    p = sub.add_parser("replay", parents=[common], help="re-run a recorded manifest")
    p.add_argument("manifest_file", metavar="MANIFEST")
    p.add_argument("--out", help="write the primary output here instead")

    return parser


class LabCLI:
    """命令行实验类，使用共享的 LabCore"""

    def __init__(self, args: argparse.Namespace, argv: Sequence[str]):
        self.args = args
        self.argv = list(argv)
        self.settings: Dict[str, Any] = load_config(args.config) if args.config else dict(CONFIG)
        init_localization(args.lang or self.settings["LANGUAGE"])
        self.core = LabCore(args.log_dir, enabled=not args.no_log, settings=self.settings)
        self.seed: int = self._setting(args.seed, "MASTER_SEED")

        unknown = self.settings.pop("_UNKNOWN_KEYS", [])
        if unknown:
            print(t("cli.unknown_config_keys", keys=", ".join(unknown)), file=sys.stderr)
            self.core.log_operation("config", {"path": args.config}, f"ignored keys: {unknown}")

    def _setting(self, value: Any, key: str) -> Any:
        return self.settings[key] if value is None else value

    # ===== 参数解析 =====

    def _kind(self, escape_study: bool = False) -> MapKind:
        a = self.args
        study = escape_study or a.escape_study
        base = parse_map_selector(a.map, study)
        if a.slope_error or a.offset or a.saturation:
            return MapKind.perturbed(base, a.slope_error, a.offset, a.saturation)
        return base

    def _x0(self, kind: MapKind) -> float:
        if self.args.x0 is not None:
            return float(self.args.x0)
        lo, hi = kind.domain
        return interior_start(dither_generator(derive_seed(self.seed, 0)), lo, hi)

    def _orbit_config(self, kind: MapKind, n_steps: int) -> OrbitConfig:
        return OrbitConfig(
            x0=self._x0(kind),
            n_steps=n_steps,
            dither_amplitude=self._setting(self.args.dither, "DITHER"),
            rng_seed=self.seed,
            escape_policy=EscapePolicy(self.args.policy),
        )

    def _orbit_parameters(self, kind: MapKind, cfg: OrbitConfig) -> Dict[str, Any]:
        return {
            "map": kind.label,
            "x0": cfg.x0,
            "steps": cfg.n_steps,
            "dither": cfg.dither_amplitude,
            "seed": cfg.rng_seed,
            "policy": cfg.escape_policy.value,
        }

    def _replay_argv(self, x0: Optional[float] = None) -> List[str]:
        argv = strip_side_options(self.argv)
        if self.args.seed is None:
            argv += ["--seed", str(self.seed)]
        if x0 is not None and getattr(self.args, "x0", None) is None:
            argv += ["--x0", repr(x0)]
        return argv

    def _write_manifest(self, parameters: Dict[str, Any], outputs: List[str],
                        notes: Optional[Dict[str, Any]] = None, x0: Optional[float] = None) -> None:
        manifest = RunManifest(
            subcommand=self.args.command,
            parameters=parameters,
            master_seed=self.seed,
            argv=self._replay_argv(x0),
            outputs=outputs,
            notes=notes or {},
        )
        path = self.args.manifest or (manifest_path_for(outputs[0]) if outputs else None)
        if path is None:
            return
        self.core.write_manifest(manifest, path)
        if not self.args.json:
            print(t("cli.manifest_written", path=path))

    def _print_json(self, data: Dict[str, Any]) -> None:
        print(json.dumps(data, sort_keys=True))

    # ===== 子命令 =====

    def cmd_orbit(self) -> int:
        a = self.args
        kind = self._kind()
        cfg = self._orbit_config(kind, self._setting(a.steps, "ORBIT_STEPS"))
        orbit = iterate_orbit(kind, cfg)
        write_text(a.out, format_orbit_csv(cfg.x0, orbit))

        notes: Dict[str, Any] = {"rows": len(orbit) + 1}
        if orbit.escaped_at is not None:
            notes["escaped_at_step"] = orbit.escaped_at + 1
            print(t("cli.orbit_escaped", step=orbit.escaped_at + 1), file=sys.stderr)
        if orbit.absorbed_at_zero is not None:
            notes["absorbed_at_step"] = orbit.absorbed_at_zero + 1
            print(t("cli.orbit_absorbed", step=orbit.absorbed_at_zero + 1), file=sys.stderr)

        print(t("cli.orbit_written", rows=len(orbit) + 1, path=a.out))
        self._write_manifest(self._orbit_parameters(kind, cfg), [a.out], notes, cfg.x0)
        return EXIT_OK

    def cmd_bifurcate(self) -> int:
        a = self.args
        if not (-3.5 < a.m_lo and a.m_hi < 3.5):
            raise UsageError(f"m range [{a.m_lo}, {a.m_hi}] must lie within (-3.5, 3.5)")
        params: Dict[str, Any] = {
            "m_lo": a.m_lo,
            "m_hi": a.m_hi,
            "n_m": self._setting(a.n_m, "M_COLUMNS"),
            "bins": self._setting(a.bins, "X_BINS"),
            "transient": self._setting(a.transient, "TRANSIENT"),
            "keep": self._setting(a.keep, "KEEP"),
            "x0": self._setting(a.x0, "ZERO_PLUS_X0"),
            "dither": SCAN_DITHER if a.dither is None else a.dither,
            "seed": self.seed,
        }
        start = time.time()
        diagram = bifurcation_scan(
            params["m_lo"], params["m_hi"], params["n_m"], params["bins"], params["transient"],
            params["keep"], x0=params["x0"], dither=params["dither"], seed=self.seed, escape_study=True,
        )
        duration = time.time() - start

        write_text(a.out, format_bifurcation_csv(diagram))
        outputs = [a.out]
        print(t("cli.bifurcation_written", columns=len(diagram.m_grid), bins=len(diagram.x_centers), path=a.out))
        if a.pgm:
            write_bytes(a.pgm, render_pgm(diagram, self.settings["PGM_ESCAPED_SHADE"]))
            outputs.append(a.pgm)
            print(t("cli.pgm_written", path=a.pgm))

        escaped = [diagram.m_grid[i].item() for i in diagram.escaped_columns]
        violations = check_bifurcation_regimes(diagram)
        if escaped:
            print(t("cli.escaped_columns", count=len(escaped)))
        notes = {
            "escaped_m": escaped,
            "regime_violations": [f"m={v.m!r}: {v.problem}" for v in violations],
        }
        self.core.log_experiment("bifurcate", "generalized", params,
                                 {"escaped_columns": len(escaped), "regime_violations": len(violations)},
                                 duration)
        self._write_manifest(params, outputs, notes)
        return EXIT_OK

    def cmd_lyapunov(self) -> int:
        a = self.args
        kind = self._kind()
        cfg = self._orbit_config(kind, self._setting(a.steps, "LYAPUNOV_STEPS"))
        transient = self._setting(a.transient, "TRANSIENT")
        start = time.time()
        est = estimate_lyapunov(kind, cfg, transient)
        duration = time.time() - start
        if est.escaped_at is not None:
            raise EscapeError(est.escaped_at + 1,
                              f"orbit escaped the domain at step {est.escaped_at + 1}; "
                              f"lambda would rest on only {est.n_samples} samples")

        if a.json:
            self._print_json({
                "lambda": est.lambda_, "stderr": est.standard_error, "n": est.n_samples,
                "escaped_at": est.escaped_at, "map": kind.label,
            })
        else:
            print(f"lambda={est.lambda_!r} stderr={est.standard_error!r} n={est.n_samples}")

        params = self._orbit_parameters(kind, cfg)
        params["transient"] = transient
        self.core.log_experiment("lyapunov", kind.label, params,
                                 {"lambda": est.lambda_, "stderr": est.standard_error, "n": est.n_samples},
                                 duration)
        if a.manifest:
            self._write_manifest(params, [], {"lambda": est.lambda_}, cfg.x0)
        return EXIT_OK

    def cmd_bits(self) -> int:
        a = self.args
        if a.count < 1:
            raise UsageError(f"--count must be >= 1, got {a.count}")
        kind = self._kind()
        rule = PartitionRule(self._setting(a.threshold, "THRESHOLD"))
        cfg = self._orbit_config(kind, a.count)
        orbit = iterate_orbit(kind, cfg)
        stream = extract_bits(orbit, rule)
        write_bits_file(stream, a.out, a.format)

        notes: Dict[str, Any] = {"bit_count": stream.length, "format": a.format}
        if orbit.escaped_at is not None:
            notes["escaped_at_step"] = orbit.escaped_at + 1
            print(t("cli.bits_short", count=stream.length, requested=a.count, step=orbit.escaped_at + 1),
                  file=sys.stderr)
        if orbit.absorbed_at_zero is not None:
            notes["absorbed_at_step"] = orbit.absorbed_at_zero + 1
            print(t("cli.orbit_absorbed", step=orbit.absorbed_at_zero + 1), file=sys.stderr)

        print(t("cli.bits_written", count=stream.length, path=a.out))
        params = self._orbit_parameters(kind, cfg)
        params.update(threshold=rule.threshold, format=a.format)
        self._write_manifest(params, [a.out], notes, cfg.x0)
        return EXIT_OK

    def _packed_length(self, path: str) -> Optional[int]:
        """packed 文件的比特数：优先 --length，其次同名清单中的 bit_count"""
        if self.args.length is not None:
            return int(self.args.length)
        manifest_path = manifest_path_for(path)
        if os.path.exists(manifest_path):
            bit_count = RunManifest.load(manifest_path).notes.get("bit_count")
            return int(bit_count) if bit_count is not None else None
        return None

    def _test_stream(self) -> Tuple[BitStream, Dict[str, Any], Optional[float]]:
        a = self.args
        if a.input:
            length = self._packed_length(a.input) if a.format == "packed" else None
            stream = read_bits_file(a.input, a.format, length)
            return stream, {"input": a.input, "format": a.format, "length": stream.length}, None
        kind = self._kind()
        rule = PartitionRule(self._setting(a.threshold, "THRESHOLD"))
        cfg = self._orbit_config(kind, self._setting(a.count, "TEST_BITS"))
        stream = extract_bits(iterate_orbit(kind, cfg), rule)
        params = self._orbit_parameters(kind, cfg)
        params["threshold"] = rule.threshold
        return stream, params, cfg.x0

    def _print_report(self, report: TestReport) -> None:
        print(t("cli.test_header", length=report.length, alpha=report.alpha))
        print(f"{'test':<22}{'statistic':>14}{'p_value':>14}  verdict")
        for e in report.entries:
            stat = "-" if e.status in (TestStatus.SKIPPED, TestStatus.ERROR) else f"{e.statistic:.6g}"
            p_value = "-" if e.status in (TestStatus.SKIPPED, TestStatus.ERROR) else f"{e.p_value:.6g}"
            line = f"{e.name:<22}{stat:>14}{p_value:>14}  {e.status.value.upper()}"
            if e.detail and e.status is not TestStatus.PASS:
                line += f"  ({e.detail})"
            print(line)
        if report.markov is not None:
            m = report.markov
            print(t("cli.markov", p="undefined" if m.p is None else f"{m.p:.6f}",
                    q="undefined" if m.q is None else f"{m.q:.6f}"))
        print(t("cli.suite_pass") if report.passed else t("cli.suite_fail"))

    def cmd_test(self) -> int:
        a = self.args
        stream, params, x0 = self._test_stream()
        alpha = self._setting(a.alpha, "ALPHA")
        block_bits = self._setting(a.block_bits, "BLOCK_BITS")
        params.update(alpha=alpha, lags=list(a.lags), block_bits=block_bits)

        start = time.time()
        report = run_suite(stream, alpha, a.lags, block_bits, min_bits=self.settings["SUITE_MIN_BITS"])
        duration = time.time() - start

        if a.json:
            self._print_json(report.to_dict())
        else:
            self._print_report(report)

        self.core.log_experiment(
            "test", str(params.get("map", params.get("input"))), params,
            {e.name: f"{e.status.value} p={e.p_value:.6g}" for e in report.entries}, duration,
        )
        if a.manifest:
            self._write_manifest(params, [], {"passed": report.passed}, x0)
        return EXIT_OK if report.passed else EXIT_SUITE_FAIL

    def cmd_confine(self) -> int:
        a = self.args
        kind = self._kind(escape_study=True)
        trials = self._setting(a.trials, "CONFINE_TRIALS")
        steps = self._setting(a.steps, "CONFINE_STEPS")
        dither = self._setting(a.dither, "DITHER")
        start = time.time()
        report = confinement_probe(kind, trials, steps, seed=self.seed, dither=dither)
        duration = time.time() - start

        data = {
            "map": kind.label,
            "trials": report.trials,
            "escapes": report.escapes,
            "escape_rate": report.escape_rate,
            "median_escape_step": report.median_escape_step,
            "max_excursion": report.max_excursion,
        }
        if a.json:
            self._print_json(data)
        else:
            for key, value in data.items():
                print(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")

        params = {"map": kind.label, "trials": trials, "steps": steps, "dither": dither, "seed": self.seed}
        self.core.log_experiment("confine", kind.label, params, data, duration)
        if a.manifest:
            self._write_manifest(params, [], data)
        return EXIT_OK

    def cmd_replay(self) -> int:
        a = self.args
        manifest = RunManifest.load(a.manifest_file)
        argv = list(manifest.argv)
        if not argv or argv[0] == "replay":
            raise UsageError(f"manifest {a.manifest_file} does not record a replayable command")
        if a.out:
            argv += ["--out", a.out]
        if a.no_log:
            argv.append("--no-log")
        elif a.log_dir:
            argv += ["--log-dir", a.log_dir]
        return run(argv)

    def run(self) -> int:
        """执行子命令；库异常在这里记录并映射为退出码"""
        command = self.args.command
        start = time.time()
        try:
            code = getattr(self, f"cmd_{command}")()
            self.core.log_operation(command, vars(self.args), f"exit={code}", time.time() - start)
            return int(code)
        except ChaosTRNGError as e:
            self.core.log_error(str(e), e, {"command": command, "argv": " ".join(self.argv)})
            print(t("cli.error", message=e), file=sys.stderr)
            return exit_code_for(e)
        except OSError as e:
            self.core.log_error(str(e), e, {"command": command})
            print(t("cli.error", message=e), file=sys.stderr)
            return EXIT_IO


def run(argv: Sequence[str]) -> int:
    """解析 argv 并执行，返回退出码"""
    argv = list(argv)
    try:
        args = build_parser().parse_args(argv)
        cli = LabCLI(args, argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_OK
    except ChaosTRNGError as e:
        print(t("cli.error", message=e), file=sys.stderr)
        return exit_code_for(e)
    return cli.run()


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point with exception handling"""
    try:
        return run(sys.argv[1:] if argv is None else argv)
    except KeyboardInterrupt:
        print(t("cli.interrupted"), file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        print(t("cli.fatal_error", error=e), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
