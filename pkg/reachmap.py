#!/usr/bin/env python3
"""
reachmap command line: ROM assessment, capability maps and exergame analytics
"""

import hashlib
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click
import pydantic

from src.analysis.comparison import compare_maps, comparison_frame, comparison_table
from src.analysis.hull import extract_hull, hull_for_tier
from src.analysis.regions import RegionLabels, classify_regions, plan_spawns
from src.analysis.session_report import (
    load_session_log, report_frame, save_session_log, session_report, speed_table,
)
from src.capture.rom_capture import load_recording, measure_session, save_recording
from src.core import constants
from src.core.capability_map import CapabilityMap, summarize
from src.core.config import RunConfig, Settings, configure_logging, load_rom_file, parse_band
from src.core.error_handling import IncompatibleMapsError, InvalidArgumentError, ReachmapError
from src.core.models import ArmGeometry, Condition, Difficulty, SpawnPlan, UserModel
from src.core.validation import DataValidator
from src.core.variability import TRACKING_PROFILES, TrackingNoise
from src.generators.capability_map_generator import CapabilityMapGenerator
from src.generators.session_generator import SessionGenerator
from src.generators.skeleton_generator import synthesize_recording
from src.storage.exporters import read_json, write_json, write_obj, write_table
from src.storage.map_store import export_map_json, load_map, map_checksum, save_map

logger = logging.getLogger("reachmap")


class ReachmapGroup(click.Group):
    """Turns domain errors into one machine-parsable stderr line and exit code 1"""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except pydantic.ValidationError as e:
            self._fail(ctx, InvalidArgumentError(_describe_validation_error(e)))
        except ReachmapError as e:
            self._fail(ctx, e)

    @staticmethod
    def _fail(ctx, error: ReachmapError):
        message = " ".join(str(error).split())
        click.echo(f"error: {error.error_class}: {message}", err=True)
        ctx.exit(1)


def _describe_validation_error(error: pydantic.ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or error.title
        parts.append(f"{location}: {item['msg']}")
    return f"invalid {error.title}: " + "; ".join(parts)


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def provenance(ctx: click.Context, parameters: Dict[str, Any], inputs: Sequence[str] = ()) -> Dict[str, Any]:
    config: RunConfig = ctx.obj["config"]
    return {
        "tool": "reachmap",
        "version": constants.TOOL_VERSION,
        "command": ctx.info_name,
        "config": config.source_path,
        "seed": parameters.get("seed", config.seed),
        "parameters": parameters,
        "inputs": {path: file_sha256(path) for path in inputs},
    }


def write_sidecar(ctx: click.Context, out: str, parameters: Dict[str, Any], inputs: Sequence[str]):
    write_json(provenance(ctx, parameters, inputs), str(Path(out).with_suffix(".provenance.json")))


def default_out(ctx: click.Context, name: str) -> str:
    return str(Path(ctx.obj["config"].paths.output_dir) / name)


def _home(config: RunConfig, home: Optional[Sequence[float]]):
    return tuple(home) if home else config.regions.home


@click.group(cls=ReachmapGroup)
@click.option('--config', '-c', type=click.Path(exists=True, dir_okay=False), help='Run configuration file (YAML or JSON)')
@click.option('--verbose', '-v', is_flag=True, help='Verbose output')
@click.pass_context
def cli(ctx, config, verbose):
    """Capability maps and rehabilitation analytics for a 7-DoF human arm"""
    ctx.ensure_object(dict)
    settings = Settings()
    configure_logging(settings.log, verbose)
    ctx.obj['settings'] = settings
    ctx.obj['config'] = RunConfig.from_file(config) if config else RunConfig()


@cli.command()
@click.argument('recording', required=False, type=click.Path(exists=True, dir_okay=False))
@click.option('--nominal', type=click.Path(exists=True, dir_okay=False), help='Nominal ROM document for q5-q7')
@click.option('--out', '-o', type=click.Path(), help='Output ROM JSON')
@click.pass_context
def rom(ctx, recording, nominal, out):
    """Extract measured ROM limits and limb lengths from a recording (default: paths.recording)"""
    config: RunConfig = ctx.obj['config']
    recording = recording or config.paths.recording
    if not recording:
        raise click.UsageError("no RECORDING given and the config has no paths.recording")
    if not Path(recording).is_file():
        raise click.UsageError(f"recording {recording} does not exist")
    out = out or default_out(ctx, 'rom.json')
    rec = load_recording(recording)
    for result in DataValidator().validate_recording(rec):
        logger.warning(f"{result.field_name}: {result.message}")
    nominal_rom = load_rom_file(nominal) if nominal else config.nominal_rom()
    measurement = measure_session(rec, nominal_rom)

    inputs = [recording] + ([nominal] if nominal else [])
    document = {
        "rom_degrees": measurement.rom.to_degrees(),
        "rom_radians": [list(iv) for iv in measurement.rom.intervals],
        "geometry": measurement.geometry.model_dump(),
        "exercises": {k: v.model_dump() for k, v in measurement.exercises.items()},
        "error_summary": measurement.error_summary,
        "provenance": provenance(ctx, {"nominal": nominal_rom.to_degrees()}, inputs),
    }
    write_json(document, out)
    for name, (lo, hi) in measurement.rom.to_degrees().items():
        if name in constants.EXERCISE_JOINTS.values():
            click.echo(f"{name}: [{lo:.1f}, {hi:.1f}] deg  ({constants.JOINT_DESCRIPTIONS[name]})")
    click.echo(f"ROM written to {out}")


@cli.command('build-map')
@click.option('--rom', 'rom_path', type=click.Path(exists=True, dir_okay=False),
              help='ROM document (e.g. output of the rom command); its limb lengths are used when present')
@click.option('--condition', type=click.Choice([c.value for c in Condition]), help='Condition label and config restriction')
@click.option('--user-id', help='User id recorded in the map')
@click.option('--seed', type=int, help='Random seed')
@click.option('--workers', type=int, help='Worker processes (default REACHMAP_WORKERS)')
@click.option('--voxel-edge', type=float, help='Voxel edge in meters')
@click.option('--lattice-step', type=float, help='Shoulder and elbow lattice step in degrees')
@click.option('--ndir', type=int, help='Number of orientation bins')
@click.option('--no-collisions', is_flag=True, help='Disable self-collision filtering')
@click.option('--reachability-only', is_flag=True, help='Skip the score pass and write a binary reachability map')
@click.option('--out', '-o', type=click.Path(), help='Output map file')
@click.pass_context
def build_map(ctx, rom_path, condition, user_id, seed, workers, voxel_edge, lattice_step, ndir,
              no_collisions, reachability_only, out):
    """Generate a capability map for one ROM"""
    config: RunConfig = ctx.obj['config']
    condition = Condition(condition) if condition else config.condition
    out = out or default_out(ctx, f"{condition.value}.rmap")

    overrides = {
        "voxel_edge": voxel_edge, "lattice_step_deg": lattice_step, "n_dir": ndir,
        "collisions": False if no_collisions else None,
    }
    generation = config.generation.model_copy(update={k: v for k, v in overrides.items() if v is not None})
    params = generation.to_params(seed if seed is not None else config.seed)

    geometry = config.geometry
    if rom_path:
        limits = load_rom_file(rom_path)
        document = read_json(rom_path) if rom_path.endswith('.json') else {}
        if "geometry" in document:
            geometry = ArmGeometry(**document["geometry"])
    else:
        limits = config.rom_for(condition)

    generator = CapabilityMapGenerator(
        geometry, limits, config.collision, params,
        workers=workers or ctx.obj['settings'].workers, show_progress=True,
    )
    uid = user_id or config.user_id
    if reachability_only:
        cmap = generator.reachability_map(generator.fk_seed_pass(), uid, condition.value)
    else:
        cmap = generator.generate(uid, condition.value)
    save_map(cmap, out)
    for line in summarize(cmap):
        click.echo(line)
    click.echo(f"Map written to {out}")


@cli.command()
@click.argument('healthy', type=click.Path(exists=True, dir_okay=False))
@click.argument('others', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--out', '-o', type=click.Path(), help='Output CSV (a Markdown table is written next to it)')
@click.pass_context
def compare(ctx, healthy, others, out):
    """Volume and dexterity reduction of maps against a healthy baseline"""
    out = out or default_out(ctx, 'comparison.csv')
    baseline = load_map(healthy)
    rows = []
    for path in others:
        other = load_map(path)
        rows.append(compare_maps(baseline, other, other.metadata.user_id, other.metadata.condition))
    write_table(comparison_frame(rows), out, index=False)
    write_table(comparison_table(rows), str(Path(out).with_suffix('.md')))
    write_sidecar(ctx, out, {"baseline": healthy, "maps": list(others)}, [healthy] + list(others))
    for row in rows:
        click.echo(f"{row.user} {row.condition}: volume_reduction_pct={row.volume_reduction_pct:.2f} "
                   f"dexterity_reduction_pct={row.dexterity_reduction_pct:.2f} common_voxels={row.common_voxel_count}")


@cli.command()
@click.argument('map_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--band', help="Score band 'a,b' (default from config)")
@click.option('--tier', type=click.Choice([d.value for d in Difficulty]), help='Hull of a difficulty tier instead of a band')
@click.option('--out', '-o', type=click.Path(), help='Output OBJ file')
@click.pass_context
def hull(ctx, map_path, band, tier, out):
    """Convex-hull cue mesh around a score band"""
    config: RunConfig = ctx.obj['config']
    cmap = load_map(map_path)
    if tier:
        mesh = hull_for_tier(cmap, classify_regions(cmap), Difficulty(tier))
        selection: Dict[str, Any] = {"tier": tier}
    else:
        score_range = parse_band(band) or config.regions.band
        mesh = extract_hull(cmap, score_range)
        selection = {"band": list(score_range)}
    out = out or default_out(ctx, 'hull.obj')
    write_obj(mesh, out, comments={"provenance": provenance(ctx, selection, [map_path])})
    click.echo(f"Hull with {len(mesh.vertices)} vertices and {len(mesh.triangles)} triangles written to {out}")


@cli.command()
@click.argument('map_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', '-o', type=click.Path(), help='Output labels JSON')
@click.pass_context
def regions(ctx, map_path, out):
    """Easy / medium / hard tiers by score rank"""
    cmap = load_map(map_path)
    labels = classify_regions(cmap)
    out = out or default_out(ctx, 'regions.json')
    document = labels.to_document()
    document["map_checksum"] = map_checksum(cmap)
    document["provenance"] = provenance(ctx, {}, [map_path])
    write_json(document, out)
    click.echo(f"Tiers {labels.counts()} written to {out}")


def _load_labels(path: Optional[str], cmap: CapabilityMap) -> RegionLabels:
    if path is None:
        return classify_regions(cmap)
    document = read_json(path)
    if document.get("map_checksum") not in (None, map_checksum(cmap)):
        raise IncompatibleMapsError(f"labels in {path} were computed from a different map")
    return RegionLabels.from_document(document)


@cli.command()
@click.argument('map_path', type=click.Path(exists=True, dir_okay=False))
@click.argument('labels_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--home', nargs=3, type=float, help='Home position x y z in meters')
@click.option('--per-tier', type=int, help='Balloons per difficulty tier')
@click.option('--dmin', type=float, help='Minimum distance from home in meters')
@click.option('--seed', type=int, help='Random seed')
@click.option('--out', '-o', type=click.Path(), help='Output plan JSON')
@click.pass_context
def plan(ctx, map_path, labels_path, home, per_tier, dmin, seed, out):
    """Spawn plan of balloons per difficulty tier"""
    config: RunConfig = ctx.obj['config']
    cmap = load_map(map_path)
    labels = _load_labels(labels_path, cmap)
    seed = seed if seed is not None else config.seed
    per_tier = per_tier or config.regions.per_tier
    d_min = dmin if dmin is not None else config.regions.d_min
    spawn_plan = plan_spawns(cmap, labels, _home(config, home), per_tier, d_min, seed)
    out = out or default_out(ctx, 'plan.json')
    document = spawn_plan.model_dump(mode="json")
    document["provenance"] = provenance(
        ctx, {"seed": seed, "per_tier": per_tier, "d_min": d_min, "home": list(spawn_plan.home)},
        [map_path, labels_path],
    )
    write_json(document, out)
    click.echo(f"{len(spawn_plan.spawns)} spawns written to {out}")


@cli.command()
@click.argument('map_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--labels', 'labels_path', type=click.Path(exists=True, dir_okay=False), help='Region labels JSON')
@click.option('--plan', 'plan_path', type=click.Path(exists=True, dir_okay=False), help='Replay an existing spawn plan')
@click.option('--home', nargs=3, type=float, help='Home position x y z in meters')
@click.option('--per-tier', type=int, help='Balloons per difficulty tier')
@click.option('--dmin', type=float, help='Minimum distance from home in meters')
@click.option('--seed', type=int, help='Random seed')
@click.option('--user-id', help='User id of the simulated session')
@click.option('--base-speed', type=float, help='User model base speed, m/s')
@click.option('--score-gain', type=float, help='User model speed gain per unit score, m/s')
@click.option('--noise-sd', type=float, help='User model speed noise, m/s')
@click.option('--out', '-o', type=click.Path(), help='Output session log JSON')
@click.pass_context
def simulate(ctx, map_path, labels_path, plan_path, home, per_tier, dmin, seed, user_id,
             base_speed, score_gain, noise_sd, out):
    """Simulate a balloon-popping session from a parametric user model"""
    config: RunConfig = ctx.obj['config']
    cmap = load_map(map_path)
    seed = seed if seed is not None else config.seed
    overrides = {"base_speed": base_speed, "score_gain": score_gain, "noise_sd": noise_sd}
    user_model = UserModel(**{**config.user_model.model_dump(), **{k: v for k, v in overrides.items() if v is not None}})
    known = {c.value for c in Condition}
    condition = Condition(cmap.metadata.condition) if cmap.metadata.condition in known else config.condition
    generator = SessionGenerator(user_model, user_id or cmap.metadata.user_id, condition)

    inputs = [map_path]
    if plan_path:
        document = read_json(plan_path)
        document.pop("provenance", None)
        spawn_plan = SpawnPlan(**document)
        log = generator.simulate_plan(spawn_plan, seed)
        inputs.append(plan_path)
    else:
        labels = _load_labels(labels_path, cmap)
        if labels_path:
            inputs.append(labels_path)
        per_tier = per_tier or config.regions.per_tier
        d_min = dmin if dmin is not None else config.regions.d_min
        log = generator.simulate(cmap, labels, _home(config, home), per_tier, seed, d_min)

    log.provenance.update(provenance(ctx, {"seed": seed, "user_model": user_model.model_dump()}, inputs))
    out = out or default_out(ctx, f"session_{condition.value}.json")
    save_session_log(log, out)
    click.echo(f"Session with {len(log.events)} events written to {out}")


@cli.command()
@click.argument('logs', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--out', '-o', type=click.Path(), help='Output CSV (a Markdown table is written next to it)')
@click.pass_context
def report(ctx, logs, out):
    """Per-difficulty pop speed report over session logs"""
    out = out or default_out(ctx, 'speed_report.csv')
    session_logs = [load_session_log(path) for path in logs]
    validator = DataValidator()
    issues = []
    for path, log in zip(logs, session_logs):
        for result in validator.validate_session_log(log):
            logger.warning(f"{path} {result.field_name}: {result.message}")
            issues.append(result)
    speed_report = session_report(session_logs)
    write_table(report_frame(speed_report), out, float_format="%.4f", index=False)
    write_table(speed_table(speed_report), str(Path(out).with_suffix('.md')))
    write_sidecar(ctx, out, {
        "logs": list(logs),
        "invalid_events": [e.model_dump(mode="json") for e in speed_report.invalid_events],
        "validation": validator.get_validation_summary(issues),
    }, logs)
    for cell in speed_report.cells:
        click.echo(f"{cell.user_id} {cell.condition.value} {cell.difficulty.value}: "
                   f"{cell.mean_speed:.2f} m/s (sd {cell.sd_speed:.2f}, n={cell.count})")
    if speed_report.invalid_events:
        click.echo(f"{len(speed_report.invalid_events)} invalid events excluded", err=True)


@cli.command('synth-recording')
@click.option('--seed', type=int, help='Random seed')
@click.option('--profile', type=click.Choice(sorted(TRACKING_PROFILES)), help='Tracking noise profile')
@click.option('--noise-sd', type=float, help='Joint position noise in meters (overrides the profile)')
@click.option('--outlier-rate', type=float, help='Fraction of spiked frames per exercise (overrides the profile)')
@click.option('--outlier-angle', type=float, help='Spike angle in degrees')
@click.option('--frames-per-segment', type=int, default=200, help='Frames per exercise segment')
@click.option('--out', '-o', type=click.Path(), help='Output JSON Lines recording')
@click.pass_context
def synth_recording(ctx, seed, profile, noise_sd, outlier_rate, outlier_angle, frames_per_segment, out):
    """Synthesize an assessment recording by posing the arm model"""
    config: RunConfig = ctx.obj['config']
    noise = TrackingNoise.from_profile(profile) if profile else TrackingNoise()
    overrides = {"position_sd": noise_sd, "outlier_rate": outlier_rate, "outlier_angle_deg": outlier_angle}
    noise = TrackingNoise(**{**noise.model_dump(), **{k: v for k, v in overrides.items() if v is not None}})
    rec = synthesize_recording(
        config.geometry, noise_sd=noise.position_sd, outlier_rate=noise.outlier_rate,
        outlier_angle=noise.outlier_angle_deg,
        seed=seed if seed is not None else config.seed, frames_per_segment=frames_per_segment,
    )
    out = out or default_out(ctx, 'recording.jsonl')
    save_recording(rec, out)
    click.echo(f"{len(rec.frames)} frames written to {out}")


@cli.command('export-json')
@click.argument('map_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', '-o', type=click.Path(), help='Output JSON file')
@click.pass_context
def export_json(ctx, map_path, out):
    """Export a map file as plain JSON"""
    out = out or str(Path(map_path).with_suffix('.json'))
    export_map_json(load_map(map_path), out)
    click.echo(f"Map JSON written to {out}")


@cli.command()
@click.argument('map_path', type=click.Path(exists=True, dir_okay=False))
def info(map_path):
    """Summarize a map file"""
    cmap = load_map(map_path)
    for line in summarize(cmap):
        click.echo(line)
    click.echo(f"checksum: {map_checksum(cmap)}")


def main(argv: Optional[List[str]] = None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="reachmap", standalone_mode=False)
    except click.exceptions.UsageError as e:
        e.show()
        return 2
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    return rv if isinstance(rv, int) else 0


if __name__ == '__main__':
    sys.exit(main())
