"""Command-line entry point: ``carlton train | eval | inspect | generate``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from .agent import CarltonPolicy
from .baselines import EXHAUSTIVE_LIMIT, CentralizedPolicy, JarPolicy, RandomAgentPolicy
from .metrics import GridSpec, evaluate_grid, rows_to_csv, summarize, summary_to_json
from .neural import TrainingDivergenceError, load_checkpoint, save_checkpoint
from .observation import LinkTable
from .reward import neighbor_table
from .scenario import ScenarioFormatError, generate_scenario, load_scenario, serialize_scenario
from .training import LOG_COLUMNS, TrainConfig, train

log = logging.getLogger("carlton")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_DIVERGENCE = 0, 1, 2, 3
REQUIRED_KEYS = ("seed",)
POLICY_NAMES = ("carlton", "carlton-phi", "ra", "jar", "centralized")


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_config(path: str | None, seed: int | None = None) -> TrainConfig:
    doc = {}
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
        except OSError as exc:
            raise ValidationError(f"cannot read config: {exc}") from exc
        if not isinstance(doc, dict):
            raise ValidationError(f"{path}: expected a flat JSON object")
    if seed is not None:
        doc["seed"] = seed
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise ValidationError(f"missing required config key '{key}' (set it in the file or pass --seed)")
    try:
        return TrainConfig.from_dict(doc)
    except KeyError as exc:
        raise ValidationError(exc.args[0]) from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc


def _write_csv(path: Path, rows, columns) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])


def cmd_train(args) -> int:
    config = load_config(args.config, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2) + "\n")

    def on_episode(row):
        if row["episode"] % 50 == 0:
            log.info("episode %d  reward %.2f  cq_mean %.3f", row["episode"],
                     row["accumulated_reward"], row["cq_mean"])

    def on_checkpoint(net, episode):
        save_checkpoint(net, out / f"checkpoint_{episode:05d}.npz")

    try:
        net, rows = train(config, on_episode=on_episode, on_checkpoint=on_checkpoint)
    except TrainingDivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    save_checkpoint(net, out / "checkpoint.npz")
    _write_csv(out / "training_log.csv", rows, LOG_COLUMNS)
    print(f"wrote {out / 'checkpoint.npz'} and {out / 'training_log.csv'}")
    return EXIT_OK


def _parse_range(text: str) -> tuple[int, ...]:
    lo, _, hi = text.partition("-")
    try:
        lo_i, hi_i = int(lo), int(hi or lo)
    except ValueError as exc:
        raise ValidationError(f"bad --n-range {text!r}; expected e.g. 2-15") from exc
    if lo_i < 1 or hi_i < lo_i:
        raise ValidationError(f"bad --n-range {text!r}")
    return tuple(range(lo_i, hi_i + 1))


def _parse_phis(text: str) -> list[float | None]:
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if tok in ("none", "0", ""):
            out.append(None)
        else:
            try:
                out.append(float(tok))
            except ValueError as exc:
                raise ValidationError(f"bad --phi value {tok!r}") from exc
    return list(dict.fromkeys(out))


def build_policies(names, net, phis):
    policies = []
    for name in names:
        if name == "carlton":
            policies.append(CarltonPolicy(net))
        elif name == "carlton-phi":
            policies.extend(CarltonPolicy(net, phi) for phi in phis)
        elif name == "ra":
            policies.append(RandomAgentPolicy())
        elif name == "jar":
            policies.append(JarPolicy())
        elif name == "centralized":
            policies.append(CentralizedPolicy())
    # de-duplicate plain carlton when the phi sweep already includes None
    seen, unique = set(), []
    for p in policies:
        if p.name not in seen:
            seen.add(p.name)
            unique.append(p)
    return unique


def _plot_tables(rows, out: Path) -> None:
    summary = summarize(rows)
    by_n = sorted({int(n) for v in summary.values() for n in v["by_n"]})
    policies = list(summary)
    for fname, key in (("ws_by_n.csv", "ws"), ("cq_mix_by_n.csv", "cq_mix"),
                       ("cts_by_n.csv", "cts")):
        table = [{"n_networks": n, **{p: summary[p]["by_n"].get(str(n), {}).get(key, float("nan"))
                                      for p in policies}} for n in by_n]
        _write_csv(out / fname, table, ["n_networks", *policies])
    overall = [{"policy": p, "cq_mix": summary[p]["overall"]["cq_mix"], "ws": summary[p]["overall"]["ws"]}
               for p in policies]
    _write_csv(out / "overall.csv", overall, ["policy", "cq_mix", "ws"])


def cmd_eval(args) -> int:
    names = [n.strip() for n in args.policies.split(",") if n.strip()]
    bad = [n for n in names if n not in POLICY_NAMES]
    if bad:
        raise ValidationError(f"unknown policies {bad}; choose from {', '.join(POLICY_NAMES)}")
    n_values = _parse_range(args.n_range)
    phis = _parse_phis(args.phi)
    config = load_config(args.config, args.seed if args.seed is not None else 0)
    prop = config.propagation()
    k = prop.n_channels
    net = None
    if any(n.startswith("carlton") for n in names):
        if not args.checkpoint:
            raise ValidationError("carlton policies need --checkpoint")
        net = load_checkpoint(args.checkpoint)
        if net.n_channels != k:
            raise ValidationError(f"checkpoint has K={net.n_channels} but config has K={k}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = GridSpec(n_values=n_values, games_per_n=args.games_per_n, base_seed=config.seed,
                    t_points=config.decision_points, sinr_target_db=config.sinr_target_db,
                    scenario_params=config.scenario_params(), propagation=prop)

    base = build_policies([n for n in names if n != "centralized"], net, phis)
    rows = evaluate_grid(base, spec, workers=args.workers) if base else []
    if "centralized" in names:
        small = tuple(n for n in n_values if k ** n <= EXHAUSTIVE_LIMIT)
        skipped = sorted(set(n_values) - set(small))
        if skipped:
            log.warning("centralized reference disabled for N in %s (K^N > %g)", skipped, EXHAUSTIVE_LIMIT)
        if small:
            cspec = GridSpec(small, spec.games_per_n, spec.base_seed, spec.t_points, spec.sinr_target_db,
                             spec.scenario_params, spec.propagation)
            rows += evaluate_grid([CentralizedPolicy(config.sinr_target_db)], cspec, workers=args.workers)

    (out / "results.csv").write_text(rows_to_csv(rows))
    (out / "summary.json").write_text(summary_to_json(summarize(rows)) + "\n")
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2) + "\n")
    _plot_tables(rows, out)
    print(f"wrote {len(rows)} result rows to {out / 'results.csv'}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    try:
        scenario = load_scenario(Path(args.scenario).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read scenario: {exc}") from exc
    config = load_config(args.config, 0)
    table = LinkTable(scenario, config.propagation())
    nbrs = neighbor_table(scenario.centers, config.gamma_neighbor_m)
    iso = table.isolated_quality(config.sinr_target_db)
    print(f"scenario seed={scenario.seed} networks={scenario.n_networks}")
    for n, net in enumerate(scenario.networks):
        cx, cy = scenario.centers[n]
        mx, my = net.users[net.manager_index]
        print(f"network {n}: users={net.user_count} center=({cx:.1f}, {cy:.1f}) "
              f"manager={net.manager_index} at ({mx:.1f}, {my:.1f})")
    print("center distances [m]:")
    for i, (xi, yi) in enumerate(scenario.centers):
        dists = " ".join(f"{math.hypot(xi - xj, yi - yj):8.1f}" for xj, yj in scenario.centers)
        print(f"  {i:3d} {dists}")
    print(f"neighbors (gamma = {config.gamma_neighbor_m:g} m):")
    for n, s in enumerate(nbrs):
        print(f"  {n}: {sorted(s)}")
    print("isolated quality vectors:")
    for n, row in enumerate(iso):
        print(f"  {n}: " + " ".join(f"{v:.2f}" for v in row))
    return EXIT_OK


def cmd_generate(args) -> int:
    config = load_config(args.config, args.seed if args.seed is not None else 0)
    scenario = generate_scenario(args.networks, config.scenario_params(), config.seed)
    text = serialize_scenario(scenario)
    if args.out == "-":
        sys.stdout.write(text + "\n")
    else:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="carlton", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train the shared value network")
    t.add_argument("--config")
    t.add_argument("--seed", type=int)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="run the paired evaluation grid")
    e.add_argument("--checkpoint")
    e.add_argument("--config")
    e.add_argument("--seed", type=int)
    e.add_argument("--out", required=True)
    e.add_argument("--policies", default="carlton,ra,jar")
    e.add_argument("--phi", default="none", help="comma list of phi values; 'none' or 0 disables the filter")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--n-range", default="2-15")
    e.add_argument("--games-per-n", type=int, default=30)
    e.set_defaults(func=cmd_eval)

    i = sub.add_parser("inspect", help="describe a scenario file")
    i.add_argument("scenario")
    i.add_argument("--config")
    i.set_defaults(func=cmd_inspect)

    g = sub.add_parser("generate", help="write a random scenario file")
    g.add_argument("--networks", type=int, default=6)
    g.add_argument("--config")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValidationError, ScenarioFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
