"""Command-line entry point: ``atp <subcommand>``.

Settings resolve as command-line flag, then ``--config`` JSON file, then the
built-in default. Every run produces one manifest describing its inputs.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (band_means, change_rate, pgd_containment_sim, ratio_block_sweep,
                       sensitivity_sweep, spectral_variance_map)
from .auth import as_message, random_message
from .bdct import pad_to_multiple
from .corpus import synthetic_corpus
from .gate import DEFAULT_THRESHOLD, rejected, verify_request
from .imageio import PNG, ImageDecodeError, codec_identifiers, load_image, quantize8, save_image
from .masking import AtpKey, load_key, save_key
from .pipeline import protect
from .purify import KINDS, FreqRound, GaussianBlur, GaussianNoise, Jpeg, Resize, purify

MANIFEST_SCHEMA = "atp.manifest/1"
EXIT_REJECTED = 2

DEFAULTS = {
    "epsilon": 0.05,
    "alpha": 0.005,
    "steps": 50,
    "seed": 0,
    "threshold": DEFAULT_THRESHOLD,
    "jobs": 1,
}

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


class CliError(Exception):
    pass


def _now():
    return datetime.now(timezone.utc).isoformat()


def _resolve(args, names):
    cfg = {}
    if getattr(args, "config", None):
        cfg = json.loads(Path(args.config).read_text())
    out = {}
    for name in names:
        flag = getattr(args, name, None)
        out[name] = flag if flag is not None else cfg.get(name, DEFAULTS.get(name))
    return out


def manifest(command, config, **extra) -> dict:
    return {
        "schema": MANIFEST_SCHEMA,
        "command": command,
        "config": config,
        "tool_version": __version__,
        "codecs": codec_identifiers(),
        "started": extra.pop("started", _now()),
        "finished": _now(),
        **extra,
    }


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _inputs(paths):
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files += sorted(q for q in p.iterdir() if q.suffix.lower() in IMAGE_SUFFIXES)
        else:
            files.append(p)
    return files


def _key(path):
    try:
        return load_key(path)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read key {path}: {exc}") from exc


# -- subcommands ------------------------------------------------------------


def cmd_keygen(args):
    params = {k: v for k, v in (("p", args.p), ("N", args.N), ("L", args.L), ("delta", args.delta))
              if v is not None}
    key = AtpKey.from_seed(args.seed, **params) if args.seed is not None else AtpKey.generate(**params)
    save_key(key, args.out)
    _dump({"schema": "atp.key/1", "fingerprint": key.fingerprint, **key.params()})
    return 0


def cmd_protect(args):
    started = _now()
    cfg = _resolve(args, ["epsilon", "alpha", "steps", "seed", "jobs"])
    if int(cfg["steps"]) < 1:
        raise CliError("--steps must be >= 1")
    key = _key(args.key)
    msg = as_message(args.message, key.L)
    files = _inputs(args.inputs)
    if not files:
        raise CliError("no input images")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    want_trace = bool(args.trace)

    def run(path):
        img = load_image(path)
        h, w = img.shape[:2]
        if (h % key.N or w % key.N) and not args.pad:
            raise CliError(f"{path}: size {h}x{w} not divisible by {key.N} (use --pad)")
        res = protect(pad_to_multiple(img, key.N), key, msg, cfg["epsilon"], cfg["alpha"],
                      int(cfg["steps"]), int(cfg["seed"]), record_trace=want_trace)
        dest = out_dir / (Path(path).stem + ".png")
        save_image(res.clamped()[:h, :w], PNG, dest)
        return {"input": str(path), "output": str(dest), "size": [h, w],
                "padded": list(res.image.shape[:2]) != [h, w]}, res.trace

    try:
        with ThreadPoolExecutor(max_workers=int(cfg["jobs"])) as pool:
            results = list(pool.map(run, files))
    except ImageDecodeError as exc:
        raise CliError(str(exc)) from exc
    if want_trace:
        with open(args.trace, "w") as fh:
            for entry, trace in results:
                for step, loss in enumerate(trace):
                    fh.write(json.dumps({"image": entry["input"], "step": step, "loss": loss}) + "\n")
    m = manifest("protect", {**cfg, "pad": args.pad, "key_params": key.params(),
                             "key_fingerprint": key.fingerprint, "message_hex": args.message},
                 started=started, seeds=[int(cfg["seed"])], outputs=[r for r, _ in results])
    _dump(m, out_dir / "manifest.json")
    return 0


def cmd_verify(args):
    started = _now()
    cfg = _resolve(args, ["threshold"])
    key = _key(args.key)
    expected = as_message(args.message, key.L)
    images = []
    for path in args.inputs:
        try:
            images.append(load_image(path))
        except ImageDecodeError as exc:
            images.append(rejected(str(exc), cfg["threshold"]))
    verdict = verify_request(images, key, expected, cfg["threshold"], pad=args.pad)
    doc = verdict.to_json()
    for entry, path in zip(doc["images"], args.inputs):
        entry["file"] = str(path)
    m = manifest("verify", {**cfg, "pad": args.pad, "key_fingerprint": key.fingerprint},
                 started=started, inputs=[str(p) for p in args.inputs])
    if args.manifest:
        _dump(m, args.manifest)
    else:
        doc["manifest"] = m
    _dump(doc, args.out)
    return 0 if verdict.accepted else EXIT_REJECTED


def _purify_spec(args):
    kind = args.kind
    if kind == "resize":
        return Resize(args.factor)
    if kind == "jpeg":
        return Jpeg(args.quality)
    if kind == "blur":
        return GaussianBlur(args.sigma)
    if kind == "noise":
        return GaussianNoise(args.std, args.seed)
    if kind == "freq-round":
        return FreqRound(args.step, args.region, args.block)
    raise CliError(f"unknown kind {kind!r}")


def cmd_purify(args):
    started = _now()
    spec = _purify_spec(args)
    key = _key(args.key) if args.key else None
    if isinstance(spec, FreqRound) and spec.region == "mask-complement" and key is None:
        raise CliError("--region mask-complement needs --key")
    img = load_image(args.input)
    out = purify(img, spec, key=key)
    save_image(out, PNG, args.out)
    if args.keep_jpeg and isinstance(spec, Jpeg):
        Path(args.keep_jpeg).write_bytes(spec.encode(img))
    _dump(manifest("purify", {"spec": {"kind": args.kind, **spec.__dict__}}, started=started,
                   seeds=[args.seed], inputs=[args.input], outputs=[args.out]),
          str(args.out) + ".manifest.json")
    return 0


def _analysis_spec(args):
    values = {"resize": args.factor, "jpeg": args.quality, "blur": args.sigma, "noise": args.std}
    if args.kind not in values:
        raise CliError(f"--kind must be one of {sorted(values)}")
    return KINDS[args.kind](values[args.kind])


def _corpus(args):
    if args.inputs:
        return [load_image(p) for p in _inputs(args.inputs)]
    return synthetic_corpus(args.n, args.size, seed=args.seed)


def _protected_corpus(args, key):
    rng = np.random.default_rng(args.seed)
    imgs, msgs = [], []
    for i, img in enumerate(_corpus(args)):
        m = random_message(rng, key.L)
        imgs.append(quantize8(protect(img, key, m, steps=args.steps, seed=args.seed + i).image))
        msgs.append(m)
    return imgs, msgs


def cmd_analyze(args):
    started = _now()
    key = _key(args.key) if args.key else AtpKey.from_seed(args.seed)
    result = {"schema": "atp.analysis/1", "analysis": args.analysis}
    if args.analysis == "change-rate":
        spec = _analysis_spec(args)
        imgs, _ = _protected_corpus(args, key)
        rates = {"frequency": [], "pixel": []}
        for img in imgs:
            after = purify(img, spec)
            for dom in rates:
                rates[dom].append(change_rate(img, after, dom, key.N).rate)
        result.update(kind=args.kind, frequency=float(np.mean(rates["frequency"])),
                      pixel=float(np.mean(rates["pixel"])), tolerance=1e-6, n=len(imgs))
    elif args.analysis == "spectral":
        spec = _analysis_spec(args)
        imgs, _ = _protected_corpus(args, key)
        vmap = spectral_variance_map([(x, purify(x, spec)) for x in imgs], key.N)
        low, high = band_means(vmap)
        result.update(kind=args.kind, map=vmap.round(6).tolist(), low_quartile=low, high_quartile=high)
    elif args.analysis == "sensitivity":
        imgs, msgs = _protected_corpus(args, key)
        grid = [float(g) if args.kind in ("blur", "noise") else int(g) for g in args.grid.split(",")]
        curve = sensitivity_sweep(imgs, key, args.kind, grid, msgs)
        result.update(kind=curve.kind, grid=list(curve.grid), bit_error=list(curve.bit_error))
    elif args.analysis == "sweep":
        p_grid = [float(v) for v in args.p_grid.split(",")]
        n_grid = [int(v) for v in args.n_grid.split(",")]
        rows = ratio_block_sweep(_corpus(args), key, p_grid, n_grid, seed=args.seed, steps=args.steps)
        result["rows"] = rows
        if args.csv:
            lines = ["p,N,bit_error"] + [f"{r['p']},{r['N']},{r['bit_error']}" for r in rows]
            Path(args.csv).write_text("\n".join(lines) + "\n")
    result["manifest"] = manifest("analyze " + args.analysis, {k: v for k, v in vars(args).items()
                                                              if k != "func"}, started=started,
                                  seeds=[args.seed])
    _dump(result, args.out)
    return 0


def cmd_simulate_pgd(args):
    started = _now()
    reports = [pgd_containment_sim(args.size, args.region, s, args.block).to_json()
               for s in range(args.seed, args.seed + args.seeds)]
    doc = {
        "schema": "atp.containment/1",
        "reports": reports,
        "improved_exterior_max": max(r["improved_exterior_max"] for r in reports),
        "baseline_exterior_min": min(r["baseline_exterior_max"] for r in reports),
        "manifest": manifest("simulate-pgd", {"size": args.size, "region": args.region,
                                              "block": args.block, "seeds": args.seeds},
                             started=started, seeds=list(range(args.seed, args.seed + args.seeds))),
    }
    _dump(doc, args.out)
    return 0


def cmd_serve(args):
    import uvicorn

    from .service import GateConfig, create_app

    cfg = GateConfig.load(args.config)
    host, port = cfg.listen.rsplit(":", 1)
    uvicorn.run(create_app(cfg), host=args.host or host, port=args.port or int(port))
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="atp", description="Anti-tamper perturbation toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="create a key file and its JSON sidecar")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="derive the secret deterministically (testing only)")
    p.add_argument("--p", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--delta", type=float)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("protect", help="embed authorization and protection perturbations")
    p.add_argument("inputs", nargs="+", help="image files or directories")
    p.add_argument("--key", required=True)
    p.add_argument("--message", required=True, help="authorization message as hex (8 chars for L=32)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--pad", action="store_true", help="reflect-pad to a block multiple, crop on save")
    p.add_argument("--trace", help="write the PGD loss trace as JSON lines")
    p.add_argument("--config")
    p.set_defaults(func=cmd_protect)

    p = sub.add_parser("verify", help="check a generation request (exit 0 accepted, 2 rejected)")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--key", required=True)
    p.add_argument("--message", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--pad", action="store_true")
    p.add_argument("--out")
    p.add_argument("--manifest")
    p.add_argument("--config")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("purify", help="apply one purification attack")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", required=True, choices=sorted(KINDS))
    p.add_argument("--factor", type=int, default=2)
    p.add_argument("--quality", type=int, default=50)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--std", type=float, default=0.05)
    p.add_argument("--step", type=float, default=0.02)
    p.add_argument("--region", choices=["all", "mask-complement"], default="all")
    p.add_argument("--block", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--key")
    p.add_argument("--keep-jpeg", help="also write the intermediate JPEG bytes here")
    p.set_defaults(func=cmd_purify)

    p = sub.add_parser("analyze", help="diagnostic experiments")
    p.add_argument("analysis", choices=["change-rate", "spectral", "sensitivity", "sweep"])
    p.add_argument("inputs", nargs="*", help="images to use instead of the synthetic corpus")
    p.add_argument("--kind", default="resize", choices=["resize", "jpeg", "blur", "noise"])
    p.add_argument("--factor", type=int, default=4)
    p.add_argument("--quality", type=int, default=50)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--std", type=float, default=0.05)
    p.add_argument("--grid", default="90,70,50")
    p.add_argument("--p-grid", default="0.25,0.5,0.75")
    p.add_argument("--n-grid", default="8,16,32")
    p.add_argument("--n", type=int, default=8, help="synthetic corpus size")
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--key")
    p.add_argument("--csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate-pgd", help="mask containment of both PGD variants")
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--region", type=int, default=128)
    p.add_argument("--block", type=int)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate_pgd)

    p = sub.add_parser("serve", help="run the HTTP verification gate")
    p.add_argument("--config", required=True)
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"atp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
