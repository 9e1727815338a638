"""Command-line entry points for every pipeline stage.

Each subcommand resolves its settings with precedence config file <
environment (MERCHANTRY_<KEY>) < flags, runs one stage, and writes a run
manifest next to its outputs so every artifact is traceable.
"""

from __future__ import annotations

import json
import os
import sys
import time
import uuid
from pathlib import Path

import click
import yaml

from . import appraiser as appraiser_mod
from . import auditor as auditor_mod
from . import metrics as metrics_mod
from . import negotiation as nego_mod
from . import reporting, stats
from .backends import GenerationParams, parse_backend_spec
from .catalog import (
    Catalog,
    DatasetSplit,
    catalog_stats,
    filter_catalog,
    load_catalog,
    split_dataset,
)
from .errors import MerchantryError


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as handle:
        return yaml.safe_load(handle) or {}


def _resolve(config: dict, key: str, flag_value, default=None):
    """Config precedence: file < environment < explicit flag."""
    value = config.get(key, default)
    env = os.environ.get(f"MERCHANTRY_{key.upper()}")
    if env is not None:
        value = env
    if flag_value is not None:
        value = flag_value
    return value


def _write_manifest(stage: str, config: dict, inputs: list[str],
                    outputs: list[str], out_dir: Path) -> Path:
    manifest = {
        "run_id": uuid.uuid4().hex,
        "stage": stage,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
        "started": time.time(),
        "finished": time.time(),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"manifest-{stage}-{manifest['run_id'][:8]}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return path


def _load_items(path: str, fmt: str, filtered: bool = True):
    with open(path, "rb") as handle:
        result = load_catalog(handle, format=fmt)
    items = filter_catalog(result.items) if filtered else result.items
    return items, result.rejects


@click.group()
def main():
    """Merchant NPC engine: appraisal, negotiation, evaluation, auditing."""


@main.group()
def catalog():
    """Catalog ingest and statistics."""


@catalog.command("prepare")
@click.option("--in", "in_path", required=True, help="Source catalog file.")
@click.option("--format", "fmt", default=None, help="jsonl, csv or tsv.")
@click.option("--out", "out_path", required=True, help="Filtered catalog (jsonl).")
@click.option("--splits", "splits_path", default=None, help="Split JSON output.")
@click.option("--rejects", "rejects_path", default=None, help="Rejects report (jsonl).")
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_path", default=None)
def catalog_prepare(in_path, fmt, out_path, splits_path, rejects_path, seed, config_path):
    config = _load_config(config_path)
    fmt = _resolve(config, "format", fmt, "jsonl")
    seed = int(_resolve(config, "seed", seed, 0))
    items, rejects = _load_items(in_path, fmt, filtered=False)
    filtered = filter_catalog(items)
    with open(out_path, "w", encoding="utf-8") as handle:
        for item in filtered:
            handle.write(
                json.dumps(
                    {
                        "id": item.id,
                        "name": item.name,
                        "description": item.description,
                        "price_copper": item.retail_price,
                        "is_derivative": item.is_derivative,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )
    outputs = [out_path]
    if rejects_path:
        with open(rejects_path, "w", encoding="utf-8") as handle:
            for reject in rejects:
                handle.write(
                    json.dumps(
                        {"line": reject.line_number, "error": reject.error},
                        sort_keys=True,
                    )
                    + "\n"
                )
        outputs.append(rejects_path)
    if splits_path:
        split = split_dataset(filtered, seed=seed)
        Path(splits_path).write_text(split.to_json(), encoding="utf-8")
        outputs.append(splits_path)
    _write_manifest(
        "catalog",
        {"format": fmt, "seed": seed},
        [in_path],
        outputs,
        Path(out_path).parent,
    )
    click.echo(f"kept {len(filtered)} of {len(items)} items ({len(rejects)} rejects)")


@catalog.command("stats")
@click.option("--in", "in_path", required=True)
@click.option("--format", "fmt", default="jsonl")
@click.option("--raw", is_flag=True, help="Skip filtering before summarizing.")
def catalog_stats_cmd(in_path, fmt, raw):
    items, _ = _load_items(in_path, fmt, filtered=not raw)
    summary = catalog_stats(items)
    click.echo(f"count  {summary.count:,}")
    click.echo(f"min    {summary.min:,}")
    click.echo(f"max    {summary.max:,}")
    click.echo(f"mean   {summary.mean:,}")
    click.echo(f"median {summary.median:,}")


@main.group()
def appraise():
    """Item appraisal runs and evaluation."""


@appraise.command("run")
@click.option("--items", "items_path", required=True)
@click.option("--format", "fmt", default="jsonl")
@click.option("--split", "splits_path", default=None)
@click.option("--subset", default="test", type=click.Choice(["train", "validation", "test"]))
@click.option("--backend", "backend_spec", required=True)
@click.option("--regression", is_flag=True)
@click.option("--shots", type=int, default=appraiser_mod.DEFAULT_SHOTS)
@click.option("--seed", type=int, default=0)
@click.option("--limit", type=int, default=None)
@click.option("--out", "out_path", required=True)
def appraise_run(items_path, fmt, splits_path, subset, backend_spec, regression,
                 shots, seed, limit, out_path):
    items, _ = _load_items(items_path, fmt)
    backend = parse_backend_spec(backend_spec)
    if splits_path:
        split = DatasetSplit.from_json(Path(splits_path).read_text(encoding="utf-8"))
        wanted = set(getattr(split, subset))
        targets = [item for item in items if item.id in wanted]
        pool = [item for item in items if item.id in set(split.train)]
    else:
        targets = items
        pool = items
    if limit:
        targets = targets[:limit]
    appraisals = []
    for offset, item in enumerate(targets):
        if regression:
            appraisals.append(appraiser_mod.appraise(item, backend, regression=True))
        else:
            exemplars = appraiser_mod.sample_exemplars(
                pool, shots, seed=seed + offset, exclude=item.id
            )
            appraisals.append(appraiser_mod.appraise(item, backend, exemplars))
    appraiser_mod.write_appraisals(appraisals, out_path)
    _write_manifest(
        "appraise",
        {"backend": backend_spec, "shots": shots, "seed": seed, "subset": subset},
        [items_path],
        [out_path],
        Path(out_path).parent,
    )
    click.echo(f"appraised {len(appraisals)} items -> {out_path}")


@appraise.command("eval")
@click.option("--pred", "pred_path", required=True)
@click.option("--truth", "truth_path", required=True)
@click.option("--format", "fmt", default="jsonl")
@click.option("--out", "out_path", default=None)
def appraise_eval(pred_path, truth_path, fmt, out_path):
    rows = appraiser_mod.read_appraisal_rows(pred_path)
    items, _ = _load_items(truth_path, fmt)
    truth = {item.id: item.retail_price for item in items}
    report = metrics_mod.appraisal_report(rows, truth)
    click.echo(reporting.render_appraisal_table(report))
    if out_path:
        Path(out_path).write_text(reporting.report_json(report), encoding="utf-8")
        _write_manifest(
            "evaluate", {}, [pred_path, truth_path], [out_path], Path(out_path).parent
        )


@main.group()
def negotiate():
    """Negotiation simulation and evaluation."""


@negotiate.command("simulate")
@click.option("--items", "items_path", required=True)
@click.option("--format", "fmt", default="jsonl")
@click.option("--n", "count", type=int, default=None, help="First N items only.")
@click.option("--merchant", "merchant_spec", required=True)
@click.option("--player", "player_spec", required=True)
@click.option("--mode", default="zsp", type=click.Choice(list(nego_mod.MODES)))
@click.option("--seed", type=int, default=0)
@click.option("--max-turns", type=int, default=nego_mod.DEFAULT_MAX_TURNS)
@click.option("--out-dir", "out_dir", required=True)
def negotiate_simulate(items_path, fmt, count, merchant_spec, player_spec, mode,
                       seed, max_turns, out_dir):
    items, _ = _load_items(items_path, fmt)
    if count:
        items = items[:count]
    merchant = parse_backend_spec(merchant_spec)
    player = parse_backend_spec(player_spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for offset, item in enumerate(items):
        session = nego_mod.run_negotiation(
            item, merchant, player, mode=mode, seed=seed + offset, max_turns=max_turns
        )
        path = out / f"session-{session.session_id}.json"
        path.write_text(session.to_json(), encoding="utf-8")
        written.append(str(path))
    _write_manifest(
        "negotiate",
        {"merchant": merchant_spec, "player": player_spec, "mode": mode, "seed": seed},
        [items_path],
        written,
        out,
    )
    click.echo(f"simulated {len(written)} sessions -> {out_dir}")


def _load_sessions(sessions_dir: str, items) -> list[nego_mod.NegotiationSession]:
    catalog = Catalog(items)
    sessions = []
    for path in sorted(Path(sessions_dir).glob("session-*.json")):
        doc = json.loads(path.read_text(encoding="utf-8"))
        item = catalog.get(doc["item_id"])
        if item is None:
            continue
        config = nego_mod.NegotiationConfig(**doc["config"])
        session = nego_mod.NegotiationSession(
            session_id=doc["session_id"], item=item, config=config
        )
        for row in doc["turns"]:
            control = None
            if "control" in row:
                control = nego_mod.Control(
                    kind=row["control"]["type"], amount=row["control"].get("amount")
                )
            session.transcript.append(
                nego_mod.Turn(
                    index=row["idx"],
                    speaker=row["speaker"],
                    content=row["content"],
                    tactic=row.get("tactic"),
                    control=control,
                    tactic_error=row.get("tactic_error", False),
                )
            )
        if doc.get("outcome"):
            session.outcome = nego_mod.NegotiationOutcome(
                status=doc["outcome"]["status"],
                turns_used=doc["outcome"]["turns_used"],
                agreed_price=doc["outcome"].get("agreed_price"),
            )
        session.aborted = doc.get("aborted")
        session.flagged_for_audit = doc.get("flagged_for_audit", False)
        sessions.append(session)
    return sessions


@negotiate.command("eval")
@click.option("--sessions", "sessions_dir", required=True)
@click.option("--items", "items_path", required=True)
@click.option("--format", "fmt", default="jsonl")
@click.option("--judge", "judge_spec", default=None)
@click.option("--runs", type=int, default=metrics_mod.JUDGE_RUNS)
@click.option("--out", "out_path", default=None)
def negotiate_eval(sessions_dir, items_path, fmt, judge_spec, runs, out_path):
    items, _ = _load_items(items_path, fmt)
    sessions = _load_sessions(sessions_dir, items)
    per_utterance: list[list[int]] = []
    if judge_spec:
        judge = parse_backend_spec(judge_spec)
        for session in sessions:
            if session.aborted is not None:
                continue
            context_lines: list[str] = []
            for turn in session.transcript:
                if turn.speaker == "merchant":
                    result = metrics_mod.persuasiveness(
                        turn.content, "\n".join(context_lines), judge, runs=runs
                    )
                    per_utterance.append(result.scores)
                context_lines.append(f"{turn.speaker}: {turn.content}")
    report = metrics_mod.negotiation_report(sessions, per_utterance)
    click.echo(reporting.render_negotiation_table(report))
    if out_path:
        Path(out_path).write_text(reporting.report_json(report), encoding="utf-8")
        _write_manifest(
            "evaluate",
            {"judge": judge_spec, "runs": runs},
            [sessions_dir, items_path],
            [out_path],
            Path(out_path).parent,
        )


@main.group()
def kd():
    """Knowledge-distillation corpus generation."""


@kd.command("generate")
@click.option("--items", "items_path", required=True)
@click.option("--format", "fmt", default="jsonl")
@click.option("--n", "count", type=int, default=None)
@click.option("--teacher", "teacher_spec", required=True)
@click.option("--player", "player_spec", required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", required=True)
def kd_generate(items_path, fmt, count, teacher_spec, player_spec, seed, out_path):
    items, _ = _load_items(items_path, fmt)
    if count:
        items = items[:count]
    teacher = parse_backend_spec(teacher_spec)
    player = parse_backend_spec(player_spec)
    failures = []
    corpus = nego_mod.generate_kd_corpus(
        items, teacher, player, seed=seed,
        on_error=lambda item, err: failures.append((item.id, str(err))),
    )
    with open(out_path, "w", encoding="utf-8") as handle:
        for row in corpus:
            handle.write(json.dumps(row.to_row(), sort_keys=True, ensure_ascii=False) + "\n")
    _write_manifest(
        "kd-corpus",
        {"teacher": teacher_spec, "player": player_spec, "seed": seed},
        [items_path],
        [out_path],
        Path(out_path).parent,
    )
    click.echo(f"generated {len(corpus)} dialogues ({len(failures)} failures)")


@main.group()
def audit():
    """Misbehavior audits over persisted sessions."""


@audit.command("run")
@click.option("--sessions", "sessions_dir", required=True)
@click.option("--items", "items_path", required=True)
@click.option("--format", "fmt", default="jsonl")
@click.option("--judge", "judge_spec", default=None)
@click.option("--out", "out_path", required=True)
def audit_run(sessions_dir, items_path, fmt, judge_spec, out_path):
    items, _ = _load_items(items_path, fmt)
    catalog = Catalog(items)
    sessions = _load_sessions(sessions_dir, items)
    judge = parse_backend_spec(judge_spec) if judge_spec else None
    findings = []
    for session in sessions:
        findings.extend(auditor_mod.audit_session(session, catalog, judge))
    auditor_mod.write_findings(findings, out_path)
    _write_manifest(
        "audit", {"judge": judge_spec}, [sessions_dir, items_path], [out_path],
        Path(out_path).parent,
    )
    click.echo(f"{len(findings)} findings -> {out_path}")


@main.group()
def report():
    """Render persisted reports as plain-text tables."""


@report.command("render")
@click.option("--appraisal", "appraisal_path", default=None)
@click.option("--negotiation", "negotiation_path", default=None)
@click.option("--scores", "score_paths", multiple=True,
              help="JSON score lists; 2+ runs ANOVA and Tukey-Kramer posthoc.")
def report_render(appraisal_path, negotiation_path, score_paths):
    if appraisal_path:
        doc = json.loads(Path(appraisal_path).read_text(encoding="utf-8"))
        report_obj = metrics_mod.AppraisalReport(
            mape=doc["mape"], std_dev=doc["std_dev"], skewness=doc["skewness"],
            uor=doc["uor"], n_items=doc["n_items"], n_unexpected=doc["n_unexpected"],
        )
        click.echo(reporting.render_appraisal_table(report_obj))
    if negotiation_path:
        doc = json.loads(Path(negotiation_path).read_text(encoding="utf-8"))
        report_obj = metrics_mod.NegotiationReport(**{
            key: doc[key]
            for key in (
                "persuasiveness_mean", "persuasiveness_std", "dominance_mean",
                "dominance_std", "agreement", "n_utterances", "n_settled",
                "n_sessions", "n_aborted",
            )
        })
        click.echo(reporting.render_negotiation_table(report_obj))
    if len(score_paths) >= 2:
        groups = [
            json.loads(Path(path).read_text(encoding="utf-8")) for path in score_paths
        ]
        anova = stats.anova_oneway(groups)
        pairwise = stats.tukey_hsd(groups)
        labels = [Path(path).stem for path in score_paths]
        click.echo(reporting.render_stats(anova, pairwise, labels))


@main.command("serve")
@click.option("--items", "items_path", required=True)
@click.option("--format", "fmt", default="jsonl")
@click.option("--merchant", "merchant_spec", required=True)
@click.option("--mode", default="zsp", type=click.Choice(list(nego_mod.MODES)))
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(items_path, fmt, merchant_spec, mode, host, port):
    """Run the human-player session service."""
    import uvicorn

    from .service import create_app

    items, _ = _load_items(items_path, fmt)
    app = create_app(Catalog(items), parse_backend_spec(merchant_spec), mode=mode)
    uvicorn.run(app, host=host, port=port)


def entrypoint(argv=None):
    try:
        main.main(args=argv, standalone_mode=True)
    except MerchantryError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entrypoint()
