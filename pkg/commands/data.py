"""Dataset generation commands."""

import argparse
import dataclasses
import logging
from pathlib import Path

from commands.common import load_config, require_out
from synth.benchmark import TARGET_FIRST_IDENTITY, build_synthetic, derive_seed
from synth.generator import CATALOG_FILE, RealnessGap, generate_target_domain, read_catalog, write_catalog
from synth.manifest import write_manifest
from synth.specs import IlluminationSpec, sample_identities
from utils.checkpoints import read_json
from utils.config import stage_seed
from utils.errors import ValidationError


def gen_data(args: argparse.Namespace) -> int:
    """
    Renders the synthetic collection: P identities under N catalog illuminations, K samples each.
    Every domain goes to its own dataset directory under --out, next to catalog.json.
    """
    config = load_config(args)
    out = require_out(args)
    overrides = {
        "identities": args.identities,
        "illuminations": args.illums,
        "samples_per_identity": args.per_id,
        "height": args.height,
        "width": args.width,
    }
    data = dataclasses.replace(config.data, **{k: v for k, v in overrides.items() if v is not None})

    identities, catalog, synthetic = build_synthetic(data, stage_seed(config, "gen-data"))
    for manifest in synthetic:
        write_manifest(manifest, out / manifest.name)
    write_catalog(out / CATALOG_FILE, identities, catalog)

    logging.info(f"gen-data Wrote {len(synthetic)} domains with {sum(map(len, synthetic))} images to {out}")
    return 0


def gen_target(args: argparse.Namespace) -> int:
    """
    Renders one "real" camera under a held-out illumination read from --illum-spec, with the realness gap.
    The illumination is always checked against the synthetic catalog (--catalog, or the one gen-data
    wrote next to --out), and --reuse-identities renders the catalog's identities instead of fresh ones.
    """
    config = load_config(args)
    out = require_out(args)
    illum = IlluminationSpec.from_dict(read_json(args.illum_spec))

    catalog_identities, catalog = read_catalog(args.catalog or find_catalog(out))
    if args.reuse_identities:
        identities = catalog_identities
    else:
        count = args.identities or config.data.target_identities
        identities = sample_identities(
            count, derive_seed(stage_seed(config, "gen-target"), "target-identities"), first_id=TARGET_FIRST_IDENTITY
        )

    gap = RealnessGap(
        noise_sigma=config.data.gap.noise_sigma if args.gap_sigma is None else args.gap_sigma,
        texture=config.data.gap.texture and not args.no_texture,
        blur=config.data.gap.blur and not args.no_blur,
    )
    manifest = generate_target_domain(
        identities,
        illum,
        args.per_id or config.data.target_samples_per_identity,
        gap,
        stage_seed(config, "gen-target"),
        catalog,
        args.height or config.data.height,
        args.width or config.data.width,
        name=args.name,
    )
    write_manifest(manifest, out)
    return 0


def find_catalog(out: Path) -> Path:
    """The one catalog.json next to a target directory: in its parent, a sibling or the grandparent."""
    parent = out.resolve().parent
    candidates = [parent / CATALOG_FILE, *parent.glob(f"*/{CATALOG_FILE}"), parent.parent / CATALOG_FILE]
    found = sorted({path for path in candidates if path.is_file()})
    if len(found) != 1:
        where = ", ".join(map(str, found)) if found else f"none near {out}"
        raise ValidationError(f"gen-target needs exactly one illumination catalog ({where}); pass --catalog")
    logging.info(f"gen-target Checking against {found[0]}")
    return found[0]
