"""Command-line interface.

Every subcommand writes its machine-readable output (JSON or CSV) before
printing anything for humans.  Per-group failures do not stop the other
groups; they are listed on stderr and make the exit status 1.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from . import __version__
from .agents import (DEFAULT_API_KEY_ENV, EndpointConfig, PromptTemplate, SweepError,
                     SyntheticAgent, run_sweep, simulate_agent)
from .collider import ColliderParams
from .data_io import Dataset, DataFormatError, atomic_write, dumps_csv, load_csv
from .estimator import DegenerateVarianceError
from .observations import MissingTaskError
from .pipeline import analyze_group, compare_groups
from .plotting import save_figure
from .reports import ComparisonReport, GroupReport, load_reports, save_report, save_reports
from .signatures import DEFAULT_BOOTSTRAP, DEFAULT_EPSILON, ConstantVectorError
from .tasks import TASK_IDS

log = logging.getLogger("colliderfit")

GROUP_ERRORS = (MissingTaskError, DegenerateVarianceError, ConstantVectorError)


class CliError(Exception):
    pass


def _load(path) -> Dataset:
    try:
        return load_csv(path)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}") from None
    except DataFormatError as exc:
        raise CliError(str(exc)) from None


def _select(dataset: Dataset, agent: str, style: str) -> Dataset:
    chosen = dataset.select(agent, style)
    if not chosen.records:
        raise CliError(
            f"no records match agent {agent!r} with prompt style {style!r}; "
            f"available agents: {', '.join(dataset.agents) or '(none)'}")
    return chosen


def _summary_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["agent_id", "prompt_style", "content_domain", "variant", "b", "m1", "m2", "pC",
                "rss", "aic", "loocv_r2", "ea", "mv_magnitude", "mv_flag", "spearman"])
    for r in reports:
        p = r.fit.params
        sig = r.signature
        w.writerow([
            r.agent_id, r.prompt_style, r.content_domain, r.fit.variant,
            *(f"{v:.6g}" for v in (p.b, p.m1, p.m2, p.pC, r.fit.rss, r.fit.aic)),
            f"{r.consistency.loocv_r2:.6g}" if r.consistency else "",
            f"{sig.ea:.6g}" if sig else "",
            f"{sig.mv_magnitude:.6g}" if sig else "",
            str(sig.mv_flag).lower() if sig else "",
            f"{sig.spearman_vs_reference:.6g}" if sig and sig.spearman_vs_reference is not None else "",
        ])
    return buf.getvalue()


def _report_failures(failures) -> int:
    if not failures:
        return 0
    print(f"{len(failures)} group(s) failed:", file=sys.stderr)
    for label, exc in failures:
        print(f"  {label}: {exc}", file=sys.stderr)
    return 1


def _analyze(args, diagnose: bool) -> int:
    dataset = _load(args.data)
    groups = _select(dataset, args.agent, args.prompt_style).groups()
    all_groups = dataset.groups()
    reports, failures = [], []
    for key, obs in groups.items():
        label = "/".join(key)
        reference = None
        try:
            if diagnose and args.reference:
                ref_key = (args.reference, key[1], key[2])
                if ref_key not in all_groups:
                    raise CliError(f"reference {args.reference!r} has no {key[1]}/{key[2]} group")
                reference = (args.reference, all_groups[ref_key])
            reports.append(analyze_group(
                key, obs, seed=args.seed, diagnose=diagnose,
                epsilon=getattr(args, "epsilon", DEFAULT_EPSILON),
                bootstrap=getattr(args, "bootstrap", DEFAULT_BOOTSTRAP),
                reference=reference,
            ))
        except (CliError, *GROUP_ERRORS) as exc:
            failures.append((label, exc))
    if reports:
        save_reports(reports, args.out)
        sys.stdout.write(_summary_csv(reports))
    return _report_failures(failures)


def cmd_fit(args) -> int:
    return _analyze(args, diagnose=False)


def cmd_diagnose(args) -> int:
    return _analyze(args, diagnose=True)


def _single_group(dataset: Dataset, agent: str, style: str):
    groups = _select(dataset, agent, style).groups()
    if len(groups) != 1:
        names = ", ".join("/".join(k) for k in groups)
        raise CliError(f"agent {agent!r} matches {len(groups)} groups ({names}); narrow with --prompt-style")
    return next(iter(groups.items()))


def cmd_compare(args) -> int:
    dataset = _load(args.data)
    key_a, obs_a = _single_group(dataset, args.agent, args.prompt_style)
    key_b, obs_b = _single_group(dataset, args.reference, args.prompt_style)
    reports = []
    for key, obs in ((key_a, obs_a), (key_b, obs_b)):
        try:
            reports.append(analyze_group(key, obs, seed=args.seed, diagnose=True,
                                         epsilon=args.epsilon, bootstrap=args.bootstrap))
        except GROUP_ERRORS as exc:
            return _report_failures([("/".join(key), exc)])
    try:
        comparison = compare_groups(*reports)
    except ConstantVectorError:
        flat = [r.label for r in reports if len(set(r.observed_means)) == 1]
        return _report_failures([(" vs ".join(r.label for r in reports),
                                  f"constant judgments for {', '.join(flat)}; Spearman undefined")])
    save_report(comparison, args.out)
    print(f"spearman\t{comparison.spearman:.6g}")
    for task, delta in zip(TASK_IDS, comparison.deltas):
        print(f"{task}\t{delta:+.6g}")
    return 0


def _parse_params(text: str) -> ColliderParams:
    try:
        values = [float(v) for v in text.split(",")]
        return ColliderParams(*values)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"expected b,m1,m2,pC in [0,1]: {exc}") from None


def cmd_simulate(args) -> int:
    styles = ("direct", "cot") if args.prompt_style == "all" else (args.prompt_style,)
    dataset = Dataset()
    for i, style in enumerate(styles):
        agent = SyntheticAgent(args.params, args.noise, args.seed + i, args.agent_name,
                               style, args.content_domain)
        dataset.extend(simulate_agent(agent, args.repeats))
    atomic_write(args.out, dumps_csv(dataset))
    print(f"wrote {len(dataset)} records to {args.out}")
    return 0


def cmd_run_agent(args) -> int:
    config = EndpointConfig(
        base_url=args.endpoint, model_name=args.model, api_key_env=args.api_key_env,
        max_in_flight=args.max_in_flight, timeout=args.timeout, retries=args.retries,
    )
    styles = ("direct", "cot") if args.prompt_style == "all" else (args.prompt_style,)
    transcript = args.transcript or str(Path(args.out).with_suffix(".jsonl"))
    dataset, failures = Dataset(), []
    for style in styles:
        template = (PromptTemplate.from_file(args.template, style) if args.template
                    else PromptTemplate.default(style))
        try:
            result = run_sweep(config, template, args.repeats, transcript,
                               agent_id=args.agent_name or args.model,
                               content_domain=args.content_domain)
        except SweepError as exc:
            failures.append((style, exc))
            continue
        dataset.extend(result.dataset)
        failures.extend((style, err) for err in result.errors)
    atomic_write(args.out, dumps_csv(dataset))
    print(f"wrote {len(dataset)} records to {args.out}; transcript {transcript}")
    return _report_failures(failures)


def cmd_report(args) -> int:
    try:
        items = load_reports(args.report)
    except FileNotFoundError:
        raise CliError(f"no such file: {args.report}") from None
    groups = []
    for item in items:
        groups.extend([item.a, item.b] if isinstance(item, ComparisonReport) else [item])
    table = _task_table(groups)
    out = Path(args.out)
    atomic_write(out.with_suffix(".csv"), table)
    save_figure(groups, out)
    sys.stdout.write(table)
    return 0


def _task_table(groups: list[GroupReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["agent_id", "prompt_style", "content_domain", "task_id",
                "judgment", "cbn_prediction", "ci_lower", "ci_upper"])
    for g in groups:
        for i, task in enumerate(TASK_IDS):
            ci = g.signature.ci.get(task) if g.signature else None
            w.writerow([g.agent_id, g.prompt_style, g.content_domain, str(task),
                        f"{g.observed_means[i]:.6g}", f"{g.fit.predictions[i]:.6g}",
                        f"{ci[0]:.6g}" if ci else "", f"{ci[1]:.6g}" if ci else ""])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colliderfit",
        description="Fit leaky noisy-OR collider models to probability judgments.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_flags(p, out_help):
        p.add_argument("--data", required=True, help="judgment CSV")
        p.add_argument("--agent", default="*", help="agent id glob (default: all)")
        p.add_argument("--prompt-style", choices=("direct", "cot", "all"), default="all")
        p.add_argument("--out", required=True, help=out_help)
        p.add_argument("--seed", type=int, default=0)

    def diag_flags(p):
        p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                       help="Markov-violation threshold (default 0.05)")
        p.add_argument("--bootstrap", type=int, default=DEFAULT_BOOTSTRAP,
                       help="bootstrap resamples (default 1000)")

    p = sub.add_parser("fit", help="AIC-selected CBN fit and LOOCV R^2 per group")
    data_flags(p, "JSON report path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", help="fit plus EA, MV, bootstrap CIs and alignment")
    data_flags(p, "JSON report path")
    diag_flags(p)
    p.add_argument("--reference", help="agent whose means anchor the Spearman alignment")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("compare", help="Spearman alignment and task deltas of two agents")
    data_flags(p, "JSON comparison path")
    diag_flags(p)
    p.add_argument("--reference", required=True, help="second agent")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="judgments from a synthetic CBN agent")
    p.add_argument("--params", type=_parse_params, required=True, help="b,m1,m2,pC")
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise sigma on [0,1] scale")
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--agent-name", default="synthetic")
    p.add_argument("--prompt-style", choices=("direct", "cot", "all"), default="direct")
    p.add_argument("--content-domain", default="synthetic")
    p.add_argument("--out", required=True, help="CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run-agent", help="collect judgments from a chat-completion endpoint")
    p.add_argument("--endpoint", required=True, help="base URL of the chat-completion API")
    p.add_argument("--model", required=True)
    p.add_argument("--template", help="prompt template file with $cover_story/$evidence/$query")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--max-in-flight", type=int, default=4)
    p.add_argument("--prompt-style", choices=("direct", "cot", "all"), default="direct")
    p.add_argument("--api-key-env", default=DEFAULT_API_KEY_ENV,
                   help=f"environment variable holding the API key (default {DEFAULT_API_KEY_ENV})")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--agent-name")
    p.add_argument("--content-domain", default="rw17")
    p.add_argument("--transcript", help="JSONL transcript (default: next to --out)")
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--seed", type=int, default=0, help="unused; accepted for uniformity")
    p.set_defaults(func=cmd_run_agent)

    p = sub.add_parser("report", help="render a JSON report as an SVG figure and CSV table")
    p.add_argument("--report", required=True, help="JSON from fit, diagnose or compare")
    p.add_argument("--out", required=True, help="SVG path; the CSV table goes next to it")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
