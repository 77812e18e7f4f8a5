"""Run configuration, orchestration, and file I/O for training,
evaluation, baselines, the reward-weight sweep, and net checking.

A run is fully described by a JSON config file (nested objects,
addressable with dotted key paths for overrides) plus a seed; every
output byte except the metadata sidecar's timestamps is determined by
them.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import datetime
import hashlib
import itertools
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .agents import (
    AgentConfig,
    AgentMode,
    TrainResult,
    evaluate,
    evaluate_baseline,
    greedy_policy,
    train_loop,
)
from .junction import ConfigError, JunctionConfig
from .neural import MLP
from .petri import PetriNet, parse_net, reachability, traffic_light_net
from .rewards import EpisodeRecord, EvalSummary, RewardWeights, ajwt, summarize
from .wrapper import ConstraintWrapper, WrapperMode

SWEEP_GRID_DEFAULT = (0.0, 1.0, 1.5, 2.0)


@dataclass(frozen=True)
class RunConfig:
    profile: str = "desk"
    junction: JunctionConfig = field(default_factory=JunctionConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    weights: RewardWeights = field(default_factory=RewardWeights)
    wrapper_mode: WrapperMode = WrapperMode.MASK
    pn: str = "traffic_light"  # builtin name or a net JSON file path
    seed: int = 0
    output_dir: str = "runs/out"
    delta: int | None = None  # stored, uninterpreted
    threshold_d: float | None = None  # stored, uninterpreted

    def validate(self):
        if self.profile not in ("paper", "desk"):
            raise ConfigError(f"profile must be 'paper' or 'desk', got {self.profile!r}")
        self.junction.validate()
        if self.agent.mode is AgentMode.PN_CDQN:
            if self.weights.w0 != 0.0:
                raise ConfigError("pn_cdqn runs must set w0=0 (constraint penalty is redundant)")
            if self.wrapper_mode is not WrapperMode.MASK:
                raise ConfigError("pn_cdqn requires wrapper_mode=mask")
        else:
            if self.wrapper_mode not in (WrapperMode.PENALTY, WrapperMode.SHIELD):
                raise ConfigError("dqn requires wrapper_mode=penalty or shield")

    def load_net(self) -> PetriNet:
        if self.pn == "traffic_light":
            return traffic_light_net()
        return parse_net(Path(self.pn).read_text())

    def to_dict(self) -> dict:
        return {
            "profile": self.profile,
            "junction": {
                "lambda_per_lane": (
                    list(self.junction.lambda_per_lane)
                    if isinstance(self.junction.lambda_per_lane, tuple)
                    else self.junction.lambda_per_lane
                ),
                "service_rate": self.junction.service_rate,
                "queue_capacity": self.junction.queue_capacity,
                "episode_cap": self.junction.episode_cap,
                "lane_group_map": {g: list(p) for g, p in self.junction.lane_group_map.items()},
                "seed": self.junction.seed,
            },
            "agent": {
                **{
                    f.name: getattr(self.agent, f.name)
                    for f in dataclasses.fields(self.agent)
                    if f.name not in ("mode", "hidden_sizes")
                },
                "mode": self.agent.mode.value,
                "hidden_sizes": list(self.agent.hidden_sizes),
            },
            "weights": {k: getattr(self.weights, k) for k in ("w0", "w1", "w2", "w3", "w4")},
            "wrapper_mode": self.wrapper_mode.value,
            "pn": self.pn,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "delta": self.delta,
            "threshold_d": self.threshold_d,
        }


def _coerce_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(doc: dict, dotted_key: str, value_text: str):
    """Set a dotted key path, e.g. 'agent.gamma=0.95', in a config dict."""
    parts = dotted_key.split(".")
    node = doc
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot descend into non-object at {part!r} of {dotted_key!r}")
    node[parts[-1]] = _coerce_value(value_text)


def config_from_dict(doc: dict) -> RunConfig:
    profile = doc.get("profile", "desk")

    junction_doc = dict(doc.get("junction", {}))
    if isinstance(junction_doc.get("lambda_per_lane"), list):
        junction_doc["lambda_per_lane"] = tuple(junction_doc["lambda_per_lane"])
    if "lane_group_map" in junction_doc:
        junction_doc["lane_group_map"] = {
            g: tuple(p) for g, p in junction_doc["lane_group_map"].items()
        }
    junction = JunctionConfig(**junction_doc)

    agent = AgentConfig()
    if profile == "desk":
        agent = agent.desk()
    agent_doc = dict(doc.get("agent", {}))
    if "mode" in agent_doc:
        agent_doc["mode"] = AgentMode(agent_doc["mode"])
    if "hidden_sizes" in agent_doc:
        agent_doc["hidden_sizes"] = tuple(agent_doc["hidden_sizes"])
    agent = replace(agent, **agent_doc)

    weights = RewardWeights(**doc.get("weights", {}))

    cfg = RunConfig(
        profile=profile,
        junction=junction,
        agent=agent,
        weights=weights,
        wrapper_mode=WrapperMode(doc.get("wrapper_mode", "mask")),
        pn=doc.get("pn", "traffic_light"),
        seed=int(doc.get("seed", 0)),
        output_dir=str(doc.get("output_dir", "runs/out")),
        delta=doc.get("delta"),
        threshold_d=doc.get("threshold_d"),
    )
    cfg.validate()
    return cfg


def load_config(path, overrides: list[str] | None = None) -> RunConfig:
    doc = json.loads(Path(path).read_text())
    for entry in overrides or []:
        if "=" not in entry:
            raise ConfigError(f"override must look like key.path=value, got {entry!r}")
        key, value = entry.split("=", 1)
        apply_override(doc, key, value)
    return config_from_dict(doc)


def _write_csv(path: Path, header: list[str], rows: list[list[str]]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_metadata(out: Path, kind: str):
    # timestamps live only here, keeping every other artifact reproducible
    meta = {
        "kind": kind,
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n")


def build_wrapper(cfg: RunConfig, mode: WrapperMode | None = None) -> ConstraintWrapper:
    return ConstraintWrapper(
        cfg.junction,
        net=cfg.load_net(),
        mode=mode if mode is not None else cfg.wrapper_mode,
        weights=cfg.weights,
    )


def cmd_train(cfg: RunConfig, echo=print) -> TrainResult:
    """Train one agent; writes model, sidecar config, and the training CSV."""
    cfg.validate()
    if cfg.profile == "paper":
        echo("warning: paper profile trains for 15,000,000 steps; expect a very long runtime")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    wrapper = build_wrapper(cfg)
    result = train_loop(wrapper, cfg.agent, seed=cfg.seed)

    result.model.save(out / "model.bin")
    snapshot = json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
    (out / "model.json").write_text(snapshot)
    (out / "resolved_config.json").write_text(snapshot)
    _write_csv(
        out / "training_log.csv",
        ["episode", "end_step", "episode_length", "return", "violations_requested", "violations_rate"],
        [row.csv_row() for row in result.log],
    )
    _write_metadata(out, "train")
    echo(f"trained {cfg.agent.mode.value} for {result.global_steps} steps "
         f"({len(result.log)} episodes) -> {out}")
    return result


EPISODE_CSV_HEADER = [
    "episode",
    "end_step",
    "violations_requested",
    "total_requests",
    "driven_count",
    "ajwt",
]


def _episode_rows(records: list[EpisodeRecord]) -> list[list[str]]:
    rows = []
    for i, rec in enumerate(records):
        rows.append(
            [
                str(i),
                str(rec.end_step),
                str(rec.violations_requested),
                str(rec.total_requests),
                str(len(rec.driven)),
                repr(ajwt(rec)),
            ]
        )
    return rows


def _write_eval(out: Path, summary: EvalSummary, records: list[EpisodeRecord], kind: str):
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "episodes.csv", EPISODE_CSV_HEADER, _episode_rows(records))
    _write_csv(out / "eval_summary.csv", EvalSummary.CSV_HEADER, [summary.csv_row()])
    _write_metadata(out, kind)


def cmd_eval(
    model_dir,
    episodes: int = 200,
    seed: int = 0,
    output_dir=None,
    echo=print,
) -> EvalSummary:
    """Evaluate a trained model: greedy policy, shield mode active."""
    model_dir = Path(model_dir)
    model = MLP.load(model_dir / "model.bin")
    cfg = config_from_dict(json.loads((model_dir / "model.json").read_text()))
    wrapper = build_wrapper(cfg, mode=WrapperMode.SHIELD)
    if len(wrapper.encoded_state()) != model.input_size:
        raise ConfigError(
            f"model expects input size {model.input_size}, environment encodes "
            f"{len(wrapper.encoded_state())}"
        )
    mode = cfg.agent.mode
    records = evaluate(wrapper, greedy_policy(model, mode), episodes, seed)
    params = " ".join(
        f"w{i}={v:g}" for i, v in enumerate(cfg.weights.as_tuple()) if v
    ) or "-"
    summary = summarize(records, model=mode.value, params=params)
    out = Path(output_dir) if output_dir else model_dir / "eval"
    _write_eval(out, summary, records, "eval")
    echo(
        f"{mode.value}: timesteps avg {summary.timesteps_avg:.2f} "
        f"violations avg {summary.violated_avg_pct:.3f}% ajwt avg {summary.ajwt_avg:.3f}"
    )
    return summary


def cmd_baseline(
    version: str,
    episodes: int = 200,
    seed: int = 0,
    junction: JunctionConfig | None = None,
    output_dir=None,
    echo=print,
) -> EvalSummary:
    """Replay a round-robin baseline through the shield-mode wrapper."""
    cfg_junction = junction if junction is not None else JunctionConfig()
    wrapper = ConstraintWrapper(cfg_junction, mode=WrapperMode.SHIELD)
    records = evaluate_baseline(wrapper, version, episodes, seed)
    summary = summarize(records, model=f"baseline_{version}", params="-")
    if output_dir:
        _write_eval(Path(output_dir), summary, records, "baseline")
    echo(
        f"baseline {version}: timesteps avg {summary.timesteps_avg:.2f} "
        f"violations avg {summary.violated_avg_pct:.3f}% ajwt avg {summary.ajwt_avg:.3f}"
    )
    return summary


def cell_seed(base_seed: int, index: int) -> int:
    """Independent but reproducible per-cell stream seed."""
    digest = hashlib.sha256(f"{base_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _run_sweep_cell(args):
    base_doc, index, ws, eval_episodes = args
    doc = json.loads(json.dumps(base_doc))
    w1, w2, w3, w4 = ws
    doc.setdefault("weights", {}).update({"w1": w1, "w2": w2, "w3": w3, "w4": w4})
    doc["seed"] = cell_seed(int(doc.get("seed", 0)), index)
    cfg = config_from_dict(doc)
    wrapper = build_wrapper(cfg)
    result = train_loop(wrapper, cfg.agent, seed=cfg.seed)
    eval_wrapper = build_wrapper(cfg, mode=WrapperMode.SHIELD)
    records = evaluate(
        eval_wrapper, greedy_policy(result.model, cfg.agent.mode), eval_episodes, seed=cfg.seed
    )
    params = f"w1={w1:g} w2={w2:g} w3={w3:g} w4={w4:g}"
    if cfg.weights.w0:
        params = f"w0={cfg.weights.w0:g} " + params
    return index, summarize(records, model=cfg.agent.mode.value, params=params)


def cmd_sweep(
    base_cfg: RunConfig,
    grid: tuple[float, ...] = SWEEP_GRID_DEFAULT,
    eval_episodes: int = 50,
    workers: int = 1,
    output_dir=None,
    echo=print,
) -> list[tuple[int, EvalSummary | None, str]]:
    """Train and evaluate one agent per (w1, w2, w3, w4) grid cell.

    Returns (cell index, summary or None, error message) triples and
    writes a leaderboard sorted by average timesteps, then AJWT. Failed
    cells keep an error marker row; the sweep continues.
    """
    base_cfg.validate()
    base_doc = base_cfg.to_dict()
    cells = list(itertools.product(grid, repeat=4))
    jobs = [(base_doc, i, ws, eval_episodes) for i, ws in enumerate(cells)]

    results: list[tuple[int, EvalSummary | None, str]] = []
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_sweep_cell, job): job[1] for job in jobs}
            for fut in concurrent.futures.as_completed(futures):
                index = futures[fut]
                try:
                    results.append((*fut.result(), ""))
                except Exception as exc:  # keep sweeping past broken cells
                    results.append((index, None, f"{type(exc).__name__}: {exc}"))
    else:
        for job in jobs:
            try:
                results.append((*_run_sweep_cell(job), ""))
            except Exception as exc:
                results.append((job[1], None, f"{type(exc).__name__}: {exc}"))

    ok = [r for r in results if r[1] is not None]
    failed = [r for r in results if r[1] is None]
    ok.sort(key=lambda r: (-r[1].timesteps_avg, r[1].ajwt_avg, r[0]))
    failed.sort(key=lambda r: r[0])

    rows = [[str(i), *s.csv_row()] for i, s, _ in ok]
    rows += [[str(i), "ERROR", err] + [""] * (len(EvalSummary.CSV_HEADER) - 2) for i, _, err in failed]
    if output_dir:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "leaderboard.csv", ["cell", *EvalSummary.CSV_HEADER], rows)
        _write_metadata(out, "sweep")
    echo(f"sweep finished: {len(ok)} cells ok, {len(failed)} failed")
    return ok + failed


@dataclass
class NetCheckReport:
    nodes: int
    edges: int
    truncated: bool
    max_tokens_per_place: int
    one_safe: bool
    deadlocks: int

    @property
    def passed(self) -> bool:
        return not self.truncated and self.deadlocks == 0

    def lines(self) -> list[str]:
        return [
            f"nodes: {self.nodes}",
            f"edges: {self.edges}",
            f"truncated: {str(self.truncated).lower()}",
            f"bound: {self.max_tokens_per_place}-bounded over explored markings",
            f"one_safe: {str(self.one_safe).lower()}",
            f"deadlocks: {self.deadlocks}",
        ]


def cmd_pn_check(net: PetriNet, bound: int = 1000) -> NetCheckReport:
    graph = reachability(net, bound)
    return NetCheckReport(
        nodes=len(graph.nodes),
        edges=len(graph.edges),
        truncated=graph.truncated,
        max_tokens_per_place=graph.max_tokens_per_place,
        one_safe=graph.one_safe,
        deadlocks=len(graph.deadlocks),
    )
