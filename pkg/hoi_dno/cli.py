"""
hoi-dno command line

    hoi-dno gen-data  --preset tiny --n 9 --seed 7 --out data/corpus
    hoi-dno train     --preset tiny --corpus data/corpus --out runs/model.ck
    hoi-dno sample    --preset tiny --checkpoint runs/model.ck --prompt "lift box"
    hoi-dno optimize  --preset tiny --checkpoint runs/model.ck --prompt "lift box" --mode two-phase --batch 10
    hoi-dno eval      runs/two-phase_seed0000 runs/single-phase_seed0000 --summary runs/table.csv
    hoi-dno eval      --corpus data/corpus --realism --out runs/ground_truth
    hoi-dno plot-data runs/two-phase_seed0000 runs/single-phase_seed0000 --out runs/plot.csv
    hoi-dno roundtrip runs/two-phase_seed0000/out.seq

Exit codes: 0 success, 1 library error, 2 invalid configuration, 3 missing file.
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from .config import DefaultsConfig
from .datasynth import Corpus, SHAPES, load_corpus, make_dataset
from .diffusion import cosine_schedule, load_checkpoint, save_checkpoint, shuffled_labels, train_model
from .error_formatter import EXIT_OK, exit_code, format_error
from .exceptions import ConfigError, HoiDnoError
from .losses import GoalSpec
from .metrics import EmbedClassifier, aggregate_runs, export_table, summary_table
from .pipeline import (
    MODES,
    Mode,
    RunSpec,
    evaluate_corpus,
    evaluate_realism,
    evaluate_run_dir,
    load_run_sequences,
    run,
    run_batch,
    run_dir_name,
    seed_specs,
    train_classifier,
    write_metrics,
    write_plot_data,
)
from .representation import FeatureLayout, roundtrip_check
from .rig import build_rig
from .run_config import PRESETS, RunConfig, load_run_config, preset, save_run_config

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
LOSS_FILE_SUFFIX = ".loss.csv"
REALISM_FILE = "realism.json"


def load_config(args: argparse.Namespace) -> RunConfig:
    """Preset or config file, with --seed applied on top"""
    config = load_run_config(args.config) if args.config else preset(args.preset)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed", f"must be a non-negative integer, got {args.seed}")
        config.seed = args.seed
    return config


def load_goals(path: str) -> GoalSpec:
    """
    Read goal keyframes from JSON: {"frames": [...], "translations": [[x, y, z], ...],
    "rotations": [[[...], [...], [...]], ...]}
    """
    goals_path = Path(path)
    if not goals_path.exists():
        raise FileNotFoundError(f"Goals not found: {goals_path}")
    try:
        data = json.loads(goals_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError("goals", f"invalid JSON at line {e.lineno}: {e.msg}")
    return GoalSpec.from_dict(data)


def cmd_gen_data(args: argparse.Namespace, config: RunConfig) -> None:
    rig = build_rig(config.model.rig)
    n = args.n if args.n is not None else config.training.corpus_size
    out = Path(args.out or config.paths.corpus)
    overrides: Dict = {"table_height": config.table_height}
    window = config.model.prefix_frames + config.model.generated_frames * config.n_segments
    if window > DefaultsConfig.PREFIX_FRAMES + DefaultsConfig.GENERATED_FRAMES:
        overrides["generated_frames"] = window - DefaultsConfig.PREFIX_FRAMES
    corpus = make_dataset(
        out, n, seed=config.seed, holdout=config.training.holdout, rig=rig,
        workers=args.workers, verbose=args.verbose, **overrides,
    )
    save_run_config(config, out / CONFIG_FILE)
    print(f"✓ Saved corpus of {len(corpus)} episodes to {out}")


def _write_loss_trace(trace: List[float], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["step", "loss"])
        for step, loss in enumerate(trace):
            writer.writerow([step, repr(loss)])


def cmd_train(args: argparse.Namespace, config: RunConfig) -> None:
    rig = build_rig(config.model.rig)
    if args.steps is not None:
        config.training.steps = args.steps
        config.training.validate()
    corpus = load_corpus(args.corpus or config.paths.corpus, rig=rig, split="train")
    if args.shuffle_labels:
        corpus = shuffled_labels(corpus, seed=config.seed)
    model = config.model.denoiser_config(FeatureLayout.for_rig(rig).dim, len(corpus.vocab))
    denoiser, normalizer, trace = train_model(
        corpus,
        rig,
        model,
        cosine_schedule(config.model.steps),
        config.training.steps,
        lr=config.training.lr,
        batch_size=config.training.batch_size,
        seed=config.seed,
        verbose=args.verbose,
    )
    out = Path(args.out or config.paths.checkpoint)
    out.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "steps": len(trace),
        "final_loss": trace[-1] if trace else None,
        "episodes": len(corpus),
        "shuffled_labels": bool(args.shuffle_labels),
    }
    save_checkpoint(out, denoiser, normalizer, corpus.vocab, rig, run_config=config.to_dict(), config_hash=config.config_hash(), meta=meta)
    _write_loss_trace(trace, out.with_name(out.name + LOSS_FILE_SUFFIX))
    print(f"✓ Saved checkpoint to {out}")


def _run_spec(args: argparse.Namespace, config: RunConfig, mode: Mode) -> RunSpec:
    return RunSpec(
        prompt=args.prompt,
        shape=args.shape,
        object_mesh=args.mesh,
        table_height=config.table_height,
        goals=load_goals(args.goals) if args.goals else None,
        mode=mode,
        seed=config.seed,
        n_segments=config.n_segments,
        phase1=config.dno.phase1,
        phase2=config.dno.phase2,
        single=config.dno.single,
        weights=config.weights,
        reuse_phase1_noise=getattr(args, "reuse_phase1_noise", False),
        freeze_contacts=getattr(args, "freeze_contacts", False),
        guidance_scale=getattr(args, "guidance_scale", 1.0),
        guidance_steps=getattr(args, "guidance_steps", DefaultsConfig.GUIDANCE_STEPS),
        evaluate=not args.no_eval,
    )


def _report(metrics: Dict) -> str:
    grasp = metrics.get("grasp")
    if not grasp:
        return ""
    return f" (penetration {grasp['penetration_mm']:.2f} mm, floating {grasp['floating_mm']:.2f} mm)"


def _execute(args: argparse.Namespace, config: RunConfig, mode: Mode) -> None:
    spec = _run_spec(args, config, mode)
    checkpoint_path = args.checkpoint or config.paths.checkpoint
    out_root = Path(args.out or config.paths.runs)
    count = getattr(args, "batch", 1)
    if count < 1:
        raise ConfigError("batch", f"must be a positive integer, got {count}")
    if count > 1:
        for run_dir in run_batch(seed_specs(spec, count), checkpoint_path, config.model.rig, out_root, workers=args.workers, verbose=args.verbose):
            print(f"✓ Saved run to {run_dir}")
        return
    rig = build_rig(config.model.rig)
    checkpoint = load_checkpoint(checkpoint_path, rig=rig)
    out = out_root / run_dir_name(spec)
    result = run(spec, checkpoint, rig, out, verbose=args.verbose)
    print(f"✓ Saved run to {out}{_report(result.metrics)}")


def cmd_sample(args: argparse.Namespace, config: RunConfig) -> None:
    _execute(args, config, Mode.INFERENCE_ONLY)


def cmd_optimize(args: argparse.Namespace, config: RunConfig) -> None:
    _execute(args, config, Mode(args.mode))


def _classifier(args: argparse.Namespace, corpus: Corpus, config: RunConfig) -> EmbedClassifier:
    """Load --classifier when it exists, otherwise train on the corpus train split (saved to --classifier when given)"""
    if args.classifier and Path(args.classifier).exists():
        return EmbedClassifier.load(args.classifier)
    train = corpus.split("train")
    rig = build_rig(config.model.rig)
    classifier = train_classifier(train if len(train) else corpus, rig, steps=args.classifier_steps, seed=config.seed, verbose=args.verbose)
    if args.classifier:
        classifier.save(args.classifier)
    return classifier


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> None:
    if not args.runs and not args.corpus:
        raise ConfigError("eval", "give run directories or --corpus")
    if args.realism and not args.corpus:
        raise ConfigError("eval.realism", "--realism needs --corpus as the reference set")
    rig = build_rig(config.model.rig)
    checkpoint = load_checkpoint(args.checkpoint, rig=rig) if args.checkpoint else None
    for run_dir in args.runs:
        metrics = evaluate_run_dir(run_dir, rig, checkpoint)
        print(f"✓ Saved metrics to {Path(run_dir) / 'metrics.json'}{_report(metrics)}")

    if args.summary:
        if not args.runs:
            raise ConfigError("eval.summary", "--summary needs run directories")
        summaries = aggregate_runs(args.runs)
        export_table(summaries, args.summary)
        for row in summary_table(summaries, ["floating_mm", "penetration_mm"]):
            print(f"  {row['mode']:<28} floating {row['floating_mm']:>16}  penetration {row['penetration_mm']:>16}")
        print(f"✓ Saved summary to {args.summary}")

    if not args.corpus:
        return
    corpus = load_corpus(args.corpus, rig=rig)
    if args.runs:
        if args.realism:
            classifier = _classifier(args, corpus, config)
            test = corpus.split("test")
            realism = evaluate_realism(classifier, test if len(test) else corpus, load_run_sequences(args.runs, rig), rig, seed=config.seed)
            out = Path(args.out or config.paths.runs)
            out.mkdir(parents=True, exist_ok=True)
            path = out / REALISM_FILE
            payload = {**realism.to_dict(), "runs": len(args.runs), "config_hash": config.config_hash()}
            path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
            print(f"✓ Saved realism metrics to {path}")
        return

    payload = evaluate_corpus(corpus, rig, seed=config.seed)
    if args.realism:
        classifier = _classifier(args, corpus, config)
        train, test = corpus.split("train"), corpus.split("test")
        if not len(test):
            raise ConfigError("training.holdout", "realism on a ground-truth corpus needs a 'test' split")
        held_out = [(e.features, e.root, e.verb) for e in test.entries]
        payload["realism"] = evaluate_realism(classifier, train, held_out, rig, seed=config.seed).to_dict()
    out = Path(args.out) if args.out else Path(args.corpus) / "ground_truth"
    out.mkdir(parents=True, exist_ok=True)
    path = write_metrics(payload, out, config.config_hash())
    print(f"✓ Saved metrics to {path}{_report(payload)}")


def cmd_plot_data(args: argparse.Namespace, config: RunConfig) -> None:
    path = write_plot_data(args.runs, args.out or Path(config.paths.runs) / "plot_data.csv")
    print(f"✓ Saved plot data to {path}")


def cmd_roundtrip(args: argparse.Namespace, config: RunConfig) -> None:
    rig = build_rig(args.rig) if args.rig else None
    for path in args.files:
        seq = roundtrip_check(path, rig=rig)
        print(f"✓ {path}: {len(seq.features)} frames round trip byte for byte")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", default="grab", choices=sorted(PRESETS), help="Configuration preset (default: grab)")
    parser.add_argument("--config", default=None, help="JSON run config; overrides --preset")
    parser.add_argument("--seed", type=int, default=None, help="Seed overriding the config's")
    parser.add_argument("--verbose", "-v", action="store_true", help="Progress bars and info logging")
    parser.add_argument("--traceback", action="store_true", help="Print the traceback of a failure")


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--checkpoint", default=None, help="Trained model (default: paths.checkpoint)")
    parser.add_argument("--prompt", required=True, help='Prompt from the model vocabulary, e.g. "lift box"')
    parser.add_argument("--shape", default="box", choices=[s.value for s in SHAPES], help="Object primitive")
    parser.add_argument("--mesh", default=None, help="OBJ file replacing the primitive")
    parser.add_argument("--goals", default=None, help="JSON goal keyframes (default: the prompt's scripted keyframes)")
    parser.add_argument("--out", default=None, help="Parent of the run directory (default: paths.runs)")
    parser.add_argument("--no-eval", action="store_true", help="Skip metrics")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hoi-dno",
        description="Diffusion noise optimization for contact-accurate human-object interaction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="Synthesize a ground-truth corpus")
    _add_common(p)
    p.add_argument("--n", type=int, default=None, help="Episodes (default: training.corpus_size)")
    p.add_argument("--out", default=None, help="Corpus directory (default: paths.corpus)")
    p.add_argument("--workers", type=int, default=1, help="Worker processes")
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("train", help="Train the denoiser on a corpus")
    _add_common(p)
    p.add_argument("--corpus", default=None, help="Corpus directory (default: paths.corpus)")
    p.add_argument("--out", default=None, help="Checkpoint path (default: paths.checkpoint)")
    p.add_argument("--steps", type=int, default=None, help="Training steps (default: training.steps)")
    p.add_argument("--shuffle-labels", action="store_true", help="Train on permuted prompts as a control")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("sample", help="Plain rollout from seeded noise")
    _add_common(p)
    _add_run_args(p)
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("optimize", help="Noise optimization run")
    _add_common(p)
    _add_run_args(p)
    p.add_argument("--mode", default=Mode.TWO_PHASE.value, choices=list(MODES), help="Run mode (default: two-phase)")
    p.add_argument("--batch", type=int, default=1, help="Runs with consecutive seeds from --seed")
    p.add_argument("--workers", type=int, default=1, help="Worker processes for --batch")
    p.add_argument("--reuse-phase1-noise", action="store_true", help="Start phase 2 from the phase 1 noise")
    p.add_argument("--freeze-contacts", action="store_true", help="single-phase: freeze contacts from the initial rollout")
    p.add_argument("--guidance-scale", type=float, default=1.0, help="classifier-guidance: gradient scale")
    p.add_argument("--guidance-steps", type=int, default=DefaultsConfig.GUIDANCE_STEPS, help="classifier-guidance: sampling steps")
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("eval", help="Metrics of run directories or a ground-truth corpus")
    _add_common(p)
    p.add_argument("runs", nargs="*", help="Run directories")
    p.add_argument("--corpus", default=None, help="Ground-truth corpus (evaluated when no runs are given)")
    p.add_argument("--checkpoint", default=None, help="Refuse runs not produced by this checkpoint")
    p.add_argument("--summary", default=None, help="CSV of mean ± std per mode")
    p.add_argument("--realism", action="store_true", help="Classifier-based metrics against --corpus")
    p.add_argument("--classifier", default=None, help="Classifier snapshot to load, or to save after training")
    p.add_argument("--classifier-steps", type=int, default=300, help="Classifier training steps")
    p.add_argument("--out", default=None, help="Output directory for corpus or realism metrics")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("plot-data", help="CSV of contact loss and bit flips per iteration")
    _add_common(p)
    p.add_argument("runs", nargs="+", help="Run directories")
    p.add_argument("--out", default=None, help="CSV path (default: paths.runs/plot_data.csv)")
    p.set_defaults(handler=cmd_plot_data)

    p = sub.add_parser("roundtrip", help="Validate sequence files byte for byte")
    _add_common(p)
    p.add_argument("files", nargs="+", help="Sequence files")
    p.add_argument("--rig", default=None, choices=["toy", "omomo"], help="Also check the recorded rig hash")
    p.set_defaults(handler=cmd_roundtrip)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="[%(levelname)s] %(message)s")
    handler: Callable[[argparse.Namespace, RunConfig], None] = args.handler
    try:
        handler(args, load_config(args))
    except (HoiDnoError, FileNotFoundError) as e:
        print(format_error(e, show_traceback=args.traceback, color=sys.stderr.isatty()), file=sys.stderr)
        return exit_code(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
