"""Operator CLI: hashing, registration, verification, proofs, experiments.

Exit codes: 0 success, 2 usage error, 3 invalid input, 4 not found,
5 storage or integrity failure.
"""

from __future__ import annotations

import json
import re
import sys
from functools import wraps
from pathlib import Path

import click

from .errors import IntegrityError, InvalidImageError, NotFoundError, StorageError
from .harness.bench import (
    DEFAULT_QUERY_COUNT,
    DEFAULT_SIZES,
    format_bench_table,
    run_latency_bench,
    write_bench_csv,
)
from .harness.sweep import format_sweep_table, run_sweep, write_sweep_csv
from .harness.transforms import make_edited_set
from .hashing import PerceptualHash, hash_image_file
from .prefix import PrefixScheme, prefix_from_hex
from .registry import Registry, RegistryConfig

EXIT_INVALID_INPUT = 3
EXIT_NOT_FOUND = 4
EXIT_STORAGE = 5

_HEX16 = re.compile(r"^[0-9a-fA-F]{16}$")


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handle_errors(func):
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (InvalidImageError, ValueError) as exc:
            _fail(EXIT_INVALID_INPUT, str(exc))
        except NotFoundError as exc:
            _fail(EXIT_NOT_FOUND, str(exc))
        except (IntegrityError, StorageError, OSError) as exc:
            _fail(EXIT_STORAGE, str(exc))

    return wrapper


def _resolve_target(target: str) -> PerceptualHash:
    """An existing image path wins; otherwise the argument must be hash hex."""
    path = Path(target)
    if path.exists():
        return hash_image_file(path)
    if _HEX16.match(target):
        return PerceptualHash.from_hex(target)
    raise InvalidImageError(f"{target!r} is neither an existing image file nor 16 hex digits")


def _emit(ctx: click.Context, payload: dict) -> None:
    if ctx.obj["format"] == "json":
        click.echo(json.dumps(payload, sort_keys=True, separators=(",", ":")))
    else:
        for key, value in payload.items():
            click.echo(f"{key}: {value}")


def _load_registry(ctx: click.Context) -> Registry:
    return Registry.restore(ctx.obj["registry"])


@click.group()
@click.option(
    "--registry", type=click.Path(path_type=Path), default=Path("./registry-data"),
    show_default=True, help="Registry directory for stateful commands.",
)
@click.option(
    "--scheme", type=click.Choice([s.value for s in PrefixScheme]),
    default=PrefixScheme.DISCONTINUOUS.value, show_default=True,
    help="Bucket key scheme for newly created registries and experiments.",
)
@click.option(
    "--format", "output_format", type=click.Choice(["json", "table"]),
    default="table", show_default=True,
)
@click.pass_context
def main(ctx: click.Context, registry: Path, scheme: str, output_format: str) -> None:
    """Perceptual-hash provenance registry."""
    ctx.ensure_object(dict)
    ctx.obj["registry"] = registry
    ctx.obj["scheme"] = PrefixScheme(scheme)
    ctx.obj["format"] = output_format


@main.command("hash")
@click.argument("image", type=click.Path(exists=True, path_type=Path))
@handle_errors
def hash_command(image: Path) -> None:
    """Print the 64-bit perceptual hash of IMAGE as 16 hex digits."""
    click.echo(hash_image_file(image).hex)


@main.command()
@click.argument("target")
@click.option("--platform", default="", help="Identifier of the generating platform.")
@click.option("--timestamp", default=None, help="Creation time, ISO-8601 (default: now).")
@click.option("--extra", default=None, help="Extra metadata as a JSON object.")
@click.option("--init", is_flag=True, help="Create the registry directory if missing.")
@click.option("--tolerance", type=int, default=2, show_default=True,
              help="Flip tolerance for a newly created registry.")
@click.option("--tau", type=int, default=6, show_default=True,
              help="Hamming threshold for a newly created registry.")
@click.pass_context
@handle_errors
def register(ctx, target, platform, timestamp, extra, init, tolerance, tau) -> None:
    """Register an image file or a 16-hex-digit hash."""
    ph = _resolve_target(target)
    extra_obj = json.loads(extra) if extra else None
    if extra_obj is not None and not isinstance(extra_obj, dict):
        raise ValueError("--extra must be a JSON object")
    directory = ctx.obj["registry"]
    if init and not (directory / "header.json").exists():
        registry = Registry.create(
            directory,
            RegistryConfig(scheme=ctx.obj["scheme"], flip_tolerance=tolerance, tau=tau),
        )
    else:
        registry = _load_registry(ctx)
    entry = registry.register(ph, platform_id=platform, created_at=timestamp, extra=extra_obj)
    registry.snapshot(directory)
    _emit(ctx, {"entry": entry.to_json(), "root": registry.root().hex()})


@main.command()
@click.argument("target")
@click.option("--tau", type=int, default=None, help="Override the registry's threshold.")
@click.option("--tolerance", type=int, default=None, help="Override the flip tolerance.")
@click.pass_context
@handle_errors
def verify(ctx, target, tau, tolerance) -> None:
    """Verify an image file or hash against the registry."""
    ph = _resolve_target(target)
    registry = _load_registry(ctx)
    verdict = registry.verify(ph, tau=tau, flip_tolerance=tolerance)
    _emit(ctx, verdict.to_json())


@main.command()
@click.pass_context
@handle_errors
def stats(ctx) -> None:
    """Occupancy statistics of the registry."""
    registry = _load_registry(ctx)
    s = registry.stats()
    _emit(
        ctx,
        {
            "total_entries": s.total_entries,
            "nonempty_buckets": s.nonempty_buckets,
            "mean_occupancy": round(s.mean_occupancy, 6),
            "histogram": {str(k): v for k, v in sorted(s.histogram.items())},
        },
    )


@main.command()
@click.pass_context
@handle_errors
def root(ctx) -> None:
    """Print the current root commitment."""
    registry = _load_registry(ctx)
    _emit(ctx, {"root": registry.root().hex(), "ledger_records": len(registry.ledger)})


@main.command()
@click.argument("prefix")
@click.pass_context
@handle_errors
def proof(ctx, prefix) -> None:
    """Inclusion proof for a bucket PREFIX (4 hex digits)."""
    key = prefix_from_hex(prefix)
    registry = _load_registry(ctx)
    _emit(ctx, registry.prove(key).to_json())


@main.command()
@click.option("--sizes", default=",".join(str(s) for s in DEFAULT_SIZES), show_default=True,
              help="Comma-separated registry sizes.")
@click.option("--queries", type=int, default=DEFAULT_QUERY_COUNT, show_default=True)
@click.option("--seed", type=int, default=20260101, show_default=True)
@click.option("--tolerance", type=int, default=2, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Write CSV here.")
@click.pass_context
@handle_errors
def bench(ctx, sizes, queries, seed, tolerance, out) -> None:
    """Latency scaling bench: flat scan vs metric tree vs bucketed registry."""
    import tempfile

    size_list = tuple(int(s) for s in sizes.split(","))
    with tempfile.TemporaryDirectory() as tmp:
        reports = run_latency_bench(
            sizes=size_list, query_count=queries, seed=seed,
            flip_tolerance=tolerance, ledger_dir=tmp,
        )
    click.echo(format_bench_table(reports))
    if out is not None:
        write_bench_csv(
            reports, out,
            meta={"seed": seed, "sizes": sizes, "queries": queries, "flip_tolerance": tolerance},
        )
        click.echo(f"wrote {out}", err=True)


@main.command()
@click.option("--originals", type=click.Path(exists=True, file_okay=False, path_type=Path),
              required=True, help="Directory of images to register.")
@click.option("--negatives", type=click.Path(exists=True, file_okay=False, path_type=Path),
              required=True, help="Directory of never-registered images.")
@click.option("--edits-per-image", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--tolerances", default="2,4", show_default=True)
@click.option("--taus", default="2,6,10,15,20", show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Write CSV here.")
@click.pass_context
@handle_errors
def sweep(ctx, originals, negatives, edits_per_image, seed, tolerances, taus, out) -> None:
    """Threshold sweep: register originals, query originals + edited + negatives."""
    from PIL import Image

    def load_dir(directory: Path):
        paths = sorted(
            p for p in directory.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg")
        )
        if not paths:
            raise ValueError(f"no images found under {directory}")
        images = []
        for p in paths:
            with Image.open(p) as img:
                images.append(img.convert("RGB"))
        return images

    originals_imgs = load_dir(originals)
    negatives_imgs = load_dir(negatives)
    edited = [img for _, img in make_edited_set(originals_imgs, edits_per_image, seed)]
    results = run_sweep(
        originals_imgs, edited, negatives_imgs,
        schemes=(ctx.obj["scheme"],),
        tolerances=tuple(int(t) for t in tolerances.split(",")),
        taus=tuple(int(t) for t in taus.split(",")),
    )
    click.echo(format_sweep_table(results))
    if out is not None:
        write_sweep_csv(
            results, out,
            meta={
                "seed": seed, "originals": len(originals_imgs), "edited": len(edited),
                "negatives": len(negatives_imgs), "edits_per_image": edits_per_image,
                "scheme": ctx.obj["scheme"].value,
            },
        )
        click.echo(f"wrote {out}", err=True)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.pass_context
@handle_errors
def serve(ctx, host, port) -> None:
    """Run the HTTP service over the registry directory."""
    from .service import serve as run_service

    run_service(ctx.obj["registry"], host=host, port=port)


if __name__ == "__main__":
    main()
