"""Command-line interface.

Every subcommand is deterministic: identical inputs and flags give
byte-identical outputs. Text outputs start with a ``#`` provenance line
(tool version, kernel, dataset fingerprint). Failures exit nonzero with a
single ``error: <category>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, featmap, fisher, kpca, pipeline, spectral
from .errors import DataError, XfmapError
from .kernels import KernelSpec, fingerprint, feature_distances, gram

log = logging.getLogger("xfmap")


def _provenance(cmd: str, kernel=None, data=None, **extra) -> str:
    parts = [f"xfmap {__version__}", f"cmd={cmd}"]
    if kernel is not None:
        parts.append(f'kernel="{kernel}"')
    if data is not None:
        parts.append(f"data={data}")
    parts += [f"{k}={v}" for k, v in extra.items()]
    return " ".join(parts)


def _classes(text: str) -> list[int]:
    try:
        return [int(c) for c in text.replace(" ", "").split(",") if c]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--classes must be a comma list of integers, got {text!r}")


def _kernel(text: str) -> KernelSpec:
    try:
        return KernelSpec.parse(text)
    except XfmapError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _fmt_for(path) -> str:
    return "tsv" if str(path).endswith(".tsv") else "csv"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gram(args):
    d = pipeline.load_dataset(args.input, args.labels)
    G = gram(args.kernel, d.samples)
    pipeline.export_features(G.values, args.out, fmt=_fmt_for(args.out),
                             header=_provenance("gram", args.kernel, G.dataset_fingerprint))


def cmd_fit_map(args):
    d = pipeline.load_dataset(args.input, args.labels)
    m = featmap.fit(args.kernel, d.samples, rel_cutoff=args.cutoff)
    featmap.save(m, args.out)
    print(f"fitted map: N={m.n} effective_rank={m.effective_rank} kernel={m.kernel}")


def cmd_map(args):
    m = featmap.load(args.model)
    d = pipeline.load_dataset(args.input, args.labels)
    F = m.map_dataset(d.samples, centered=args.centered)
    pipeline.export_features(
        F, args.out, labels=d.labels, fmt=_fmt_for(args.out),
        header=_provenance("map", m.kernel, fingerprint(d.samples),
                           train=m.gram.dataset_fingerprint, centered=args.centered),
    )


def cmd_kpca_fit(args):
    m = featmap.load(args.model)
    model = kpca.fit(m, args.components, route=args.route)
    ref = Path(args.model)
    try:
        ref = ref.resolve().relative_to(Path(args.out).resolve().parent)
    except ValueError:
        ref = ref.resolve()
    kpca.save(model, args.out, str(ref))
    print("lambdas: " + " ".join(pipeline.format_value(v) for v in model.lambdas))


def cmd_kpca_project(args):
    model = kpca.load(args.model)
    d = pipeline.load_dataset(args.input, args.labels)
    P = kpca.project(model, d.samples, formula=args.formula)
    P = np.atleast_2d(P).reshape(len(d), model.p)
    pipeline.export_features(
        P, args.out, labels=d.labels, fmt=_fmt_for(args.out),
        header=_provenance("kpca-project", model.featmap.kernel, fingerprint(d.samples),
                           formula=args.formula, route=model.route),
    )


def _features_and_labels(args):
    if args.labels is not None:
        F, _ = pipeline.read_features(args.input)
        y = pipeline.read_labels(args.labels)
    else:
        F, y = pipeline.read_features(args.input, labels=True)
    if len(F) != len(y):
        raise DataError(f"{len(F)} feature rows but {len(y)} labels")
    return F, y


def cmd_fisher_fit(args):
    F, y = _features_and_labels(args)
    model = fisher.fit(F, y, q=args.components, reg_gamma=args.reg_gamma)
    fisher.save(model, args.out, meta={"features": fingerprint(F)})
    print(f"fisher: q={model.q} reg_gamma={pipeline.format_value(model.reg_gamma)} "
          f"train_accuracy={fisher.accuracy(model, F, y):.6f}")


def cmd_fisher_eval(args):
    model = fisher.load(args.model)
    F, y = _features_and_labels(args)
    acc = fisher.accuracy(model, F, y)
    lines = [
        "# " + _provenance("fisher-eval", data=fingerprint(F)),
        f"samples {len(y)}",
        f"accuracy {acc:.6f}",
    ]
    for c in model.class_labels:
        mask = y == c
        if mask.any():
            lines.append(f"class {int(c)} accuracy {fisher.accuracy(model, F[mask], y[mask]):.6f}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)


def cmd_dist(args):
    A = pipeline.load_dataset(args.input).samples
    B = pipeline.load_dataset(args.input2).samples if args.input2 else None
    D = feature_distances(args.kernel, A, B)
    pipeline.export_features(D, args.out, fmt=_fmt_for(args.out),
                             header=_provenance("dist", args.kernel, fingerprint(A)))


def _load_mnist(images, labels):
    d = pipeline.load_dataset(images, labels)
    if d.labels is None:
        raise DataError(f"{images}: labels are required (pass --labels / --test-labels)")
    return pipeline.scale_unit(d)


def cmd_mnist_247(args):
    train_all = _load_mnist(args.input, args.labels)
    train = pipeline.subset_by_classes(train_all, args.classes, args.per_class, args.seed)
    test_per_class = args.test_per_class if args.test_per_class is not None else args.per_class
    if args.test_in:
        test_src = _load_mnist(args.test_in, args.test_labels)
    else:
        # no separate test file: draw the test split from the unused training rows
        rest = np.setdiff1d(np.arange(len(train_all)), train.indices)
        test_src = pipeline.Dataset(train_all.samples[rest], train_all.labels[rest],
                                    train_all.source + "|heldout", rest)
    test = pipeline.subset_by_classes(test_src, args.classes, test_per_class, args.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_fp, test_fp = fingerprint(train.samples), fingerprint(test.samples)
    report = [
        "# " + _provenance("mnist-247", data=train_fp, test=test_fp, seed=args.seed),
        f"classes {','.join(map(str, args.classes))}",
        f"train_per_class {args.per_class}",
        f"test_per_class {test_per_class}",
        f"train_indices_sha {fingerprint(train.indices.astype(np.float64))[7:23]}",
    ]
    results = {}
    for name, kernel in (("k1", KernelSpec.mnist_k1()), ("k2", KernelSpec.mnist_k2())):
        m = featmap.fit(kernel, train.samples, rel_cutoff=args.cutoff)
        Ftr = m.map_dataset(train.samples, centered=args.centered)
        Fte = m.map_dataset(test.samples, centered=args.centered)
        for split, F, d, fp in (("train", Ftr, train, train_fp), ("test", Fte, test, test_fp)):
            pipeline.export_features(
                F, out / f"features_{name}_{split}.csv", labels=d.labels,
                header=_provenance("mnist-247", kernel, fp, split=split, seed=args.seed,
                                   centered=args.centered),
            )
        model = fisher.fit(Ftr, train.labels, reg_gamma=args.reg_gamma)
        acc_tr = fisher.accuracy(model, Ftr, train.labels)
        acc_te = fisher.accuracy(model, Fte, test.labels)
        pipeline.export_features(
            fisher.transform(model, Fte), out / f"fisher_{name}_test.csv", labels=test.labels,
            header=_provenance("mnist-247", kernel, test_fp, split="test", stage="fisher",
                               reg_gamma=pipeline.format_value(model.reg_gamma)),
        )
        results[name] = acc_te
        report += [
            f"{name} kernel {kernel}",
            f"{name} effective_rank {m.effective_rank} of {m.n}",
            f"{name} reg_gamma {pipeline.format_value(model.reg_gamma)}",
            f"{name} fisher_eigenvalues {' '.join(f'{v:.6g}' for v in model.eigenvalues)}",
            f"{name} train_accuracy {acc_tr:.6f}",
            f"{name} test_accuracy {acc_te:.6f}",
        ]
    margin = results["k2"] - results["k1"]
    report += [f"margin k2-k1 {margin:+.6f}", f"k2_better {'yes' if margin > 0 else 'no'}"]
    text = "\n".join(report) + "\n"
    (out / "report.txt").write_text(text)
    sys.stdout.write(text)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xfmap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"xfmap {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.set_defaults(func=fn)
        return sp

    def io(sp, labels=True, out=True):
        sp.add_argument("--in", dest="input", required=True, help="IDX images or CSV/TSV matrix")
        if labels:
            sp.add_argument("--labels", help="IDX labels or one integer per line")
        if out:
            sp.add_argument("--out", required=True)

    kernel_help = 'kernel spec, e.g. "kind=gaussian sigma=1.0"'

    sp = add("gram", cmd_gram, "write the Gram matrix of a dataset")
    sp.add_argument("--kernel", type=_kernel, required=True, help=kernel_help)
    io(sp)

    sp = add("fit-map", cmd_fit_map, "fit an explicit feature map (XFMAP1 archive)")
    sp.add_argument("--kernel", type=_kernel, required=True, help=kernel_help)
    sp.add_argument("--cutoff", type=float, default=spectral.REL_CUTOFF,
                    help="relative eigenvalue cutoff for pseudo-inversion")
    io(sp)

    sp = add("map", cmd_map, "map a dataset through a saved feature map")
    sp.add_argument("--model", required=True, help="XFMAP1 archive")
    sp.add_argument("--centered", action="store_true", help="subtract the training mean")
    io(sp)

    sp = add("kpca-fit", cmd_kpca_fit, "fit kernel PCA on a saved feature map (KPCA1 archive)")
    sp.add_argument("--model", required=True, help="XFMAP1 archive")
    sp.add_argument("--components", type=int, required=True)
    sp.add_argument("--route", choices=kpca.ROUTES, default="primal")
    sp.add_argument("--out", required=True)

    sp = add("kpca-project", cmd_kpca_project, "project a dataset on fitted KPCA components")
    sp.add_argument("--model", required=True, help="KPCA1 archive")
    sp.add_argument("--formula", choices=tuple(kpca.PROJECTIONS), default="combined")
    io(sp)

    sp = add("fisher-fit", cmd_fisher_fit, "fit multi-class Fisher analysis on feature rows")
    sp.add_argument("--components", type=int, default=None)
    sp.add_argument("--reg-gamma", type=float, default=None,
                    help="ridge on the within-class scatter (default 1e-6 trace(S_W)/D)")
    io(sp)

    sp = add("fisher-eval", cmd_fisher_eval, "nearest-class-mean accuracy of a Fisher model")
    sp.add_argument("--model", required=True, help="FDA1 archive")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--labels")
    sp.add_argument("--out")

    sp = add("dist", cmd_dist, "squared feature-space distances k(x,x)+k(z,z)-2k(x,z)")
    sp.add_argument("--kernel", type=_kernel, required=True, help=kernel_help)
    sp.add_argument("--in2", dest="input2", help="second dataset (default: --in against itself)")
    io(sp, labels=False)

    sp = add("mnist-247", cmd_mnist_247, "k1 vs k2 explicit-feature experiment on MNIST digits")
    io(sp)
    sp.add_argument("--test-in", help="test images (default: held-out rows of --in)")
    sp.add_argument("--test-labels")
    sp.add_argument("--classes", type=_classes, default=[2, 4, 7])
    sp.add_argument("--per-class", type=int, default=500)
    sp.add_argument("--test-per-class", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--reg-gamma", type=float, default=None)
    sp.add_argument("--cutoff", type=float, default=spectral.REL_CUTOFF)
    sp.add_argument("--centered", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except XfmapError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: value: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
