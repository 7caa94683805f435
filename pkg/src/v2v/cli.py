"""Operational CLI: serve the API, move bundles in and out, run reports.

Data commands work directly against a data directory by default; pass
--url to run them as a thin client against a live server instead.
"""

from __future__ import annotations

import datetime as dt
import json
import os
import sys
from pathlib import Path
from typing import Optional

import click
import httpx

from . import analytics
from .api import _parse_range_bound, create_app
from .geo import geocoder_from_env
from .service import CorpusValidationError, DatasetService, check_bundle
from .store import BundleError, DocumentStore, dump_bundle, parse_bundle


def _data_dir(value: Optional[str]) -> Path:
    return Path(value or os.environ.get("DATA_DIR", "./data"))


def _service(data_dir: Optional[str]) -> DatasetService:
    return DatasetService(DocumentStore(_data_dir(data_dir)))


def _auth_headers(token: Optional[str]) -> dict[str, str]:
    token = token or os.environ.get("AUTH_PLANNER_TOKEN", "")
    return {"Authorization": f"Bearer {token}"} if token else {}


@click.group()
def main():
    """Community engagement data service."""


@main.command()
@click.option("--port", type=int, default=lambda: int(os.environ.get("PORT", "8000")))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", "data_dir", default=None, help="Dataset directory (default: $DATA_DIR or ./data)")
def serve(port: int, host: str, data_dir: Optional[str]):
    """Run the HTTP service."""
    import uvicorn

    app = create_app(data_dir=_data_dir(data_dir))
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command(name="import")
@click.option("--file", "path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--merge", is_flag=True, help="Upsert into the existing dataset instead of replacing it.")
@click.option("--data-dir", "data_dir", default=None)
@click.option("--url", default=None, help="Import through a running server instead of the data dir.")
@click.option("--token", default=None, help="Planner token for --url mode (default: $AUTH_PLANNER_TOKEN).")
def import_cmd(path: str, merge: bool, data_dir: Optional[str], url: Optional[str], token: Optional[str]):
    """Load a six-collection bundle file."""
    mode = "merge" if merge else "replace"
    text = Path(path).read_text(encoding="utf-8")
    if url:
        response = httpx.post(
            f"{url.rstrip('/')}/api/admin/import",
            params={"mode": mode},
            content=text,
            headers=_auth_headers(token),
            timeout=120.0,
        )
        if response.status_code != 200:
            click.echo(f"import failed ({response.status_code}): {response.text}", err=True)
            sys.exit(1)
        payload = response.json()
        click.echo(f"imported {payload['total']} documents ({mode})")
        for warning in payload.get("warnings", []):
            click.echo(f"warning: {warning}", err=True)
        return

    service = _service(data_dir)
    geocoder = geocoder_from_env(os.environ, store=service.store)
    try:
        report = service.import_bundle(text, mode=mode, geocoder=geocoder)
    except (BundleError, CorpusValidationError) as exc:
        click.echo(f"import failed: {exc}", err=True)
        details = getattr(exc, "details", None) or [
            f"{e.code}: {e.message}" for e in getattr(getattr(exc, "report", None), "errors", [])
        ]
        for line in details:
            click.echo(f"  {line}", err=True)
        sys.exit(1)
    click.echo(f"imported {report.total} documents ({mode})")
    for warning in report.warnings:
        click.echo(f"warning: {warning}", err=True)


@main.command()
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--data-dir", "data_dir", default=None)
@click.option("--url", default=None, help="Export from a running server instead of the data dir.")
def export(out_path: str, data_dir: Optional[str], url: Optional[str]):
    """Write the current dataset to a bundle file."""
    if url:
        response = httpx.get(f"{url.rstrip('/')}/api/admin/export", timeout=120.0)
        if response.status_code != 200:
            click.echo(f"export failed ({response.status_code}): {response.text}", err=True)
            sys.exit(1)
        Path(out_path).write_text(response.text, encoding="utf-8")
    else:
        service = _service(data_dir)
        if not service.dataset_loaded():
            click.echo("export failed: no dataset imported yet", err=True)
            sys.exit(1)
        Path(out_path).write_text(dump_bundle(service.export_bundle()), encoding="utf-8")
    click.echo(f"exported to {out_path}")


@main.command()
@click.option("--file", "path", required=True, type=click.Path(exists=True, dir_okay=False))
def validate(path: str):
    """Check a bundle file against every corpus invariant."""
    try:
        bundle = parse_bundle(Path(path).read_text(encoding="utf-8"))
    except BundleError as exc:
        click.echo(f"parse error: {exc}", err=True)
        for line in exc.details:
            click.echo(f"  {line}", err=True)
        sys.exit(1)
    _, report = check_bundle(bundle)
    for issue in report.errors:
        click.echo(f"error: [{issue.code}] {issue.collection}/{issue.id}: {issue.message}", err=True)
    for issue in report.warnings:
        click.echo(f"warning: [{issue.code}] {issue.collection}/{issue.id}: {issue.message}", err=True)
    if report.errors:
        click.echo(f"{len(report.errors)} errors, {len(report.warnings)} warnings", err=True)
        sys.exit(1)
    click.echo(f"ok: 0 errors, {len(report.warnings)} warnings")


@main.command()
@click.option("--from", "date_from", default=None, help="Start date (YYYY-MM-DD, inclusive).")
@click.option("--to", "date_to", default=None, help="End date (YYYY-MM-DD, inclusive).")
@click.option("--no-outlier-filter", is_flag=True, help="Skip the top-5% session removal.")
@click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")
@click.option("--csv-dir", default=None, type=click.Path(file_okay=False), help="Also write CSV tables here.")
@click.option("--data-dir", "data_dir", default=None)
@click.option("--url", default=None, help="Fetch the report from a running server.")
@click.option("--token", default=None)
def report(
    date_from: Optional[str],
    date_to: Optional[str],
    no_outlier_filter: bool,
    as_json: bool,
    csv_dir: Optional[str],
    data_dir: Optional[str],
    url: Optional[str],
    token: Optional[str],
):
    """Compute the usage report over ingested telemetry."""
    if url:
        params: dict[str, str] = {}
        if date_from:
            params["from"] = date_from
        if date_to:
            params["to"] = date_to
        if no_outlier_filter:
            params["outlier_filter"] = "false"
        response = httpx.get(
            f"{url.rstrip('/')}/api/analytics/report",
            params=params,
            headers=_auth_headers(token),
            timeout=120.0,
        )
        if response.status_code != 200:
            click.echo(f"report failed ({response.status_code}): {response.text}", err=True)
            sys.exit(1)
        usage = analytics.UsageReport(**response.json())
    else:
        base = _data_dir(data_dir)
        log = analytics.AnalyticsLog(base / "analytics" / "records.ndjson")
        service = DatasetService(DocumentStore(base))
        corpus = service.corpus() if service.dataset_loaded() else None
        start = _parse_range_bound(date_from, end=False) if date_from else None
        end = _parse_range_bound(date_to, end=True) if date_to else None
        records = log.records_between(start, end)
        usage = analytics.usage_report(
            records, corpus=corpus, top_fraction=None if no_outlier_filter else 0.05
        )

    if as_json:
        click.echo(json.dumps(usage.model_dump(), indent=2, sort_keys=True))
    else:
        click.echo(analytics.render_report_text(usage), nl=False)
    if csv_dir:
        target = Path(csv_dir)
        target.mkdir(parents=True, exist_ok=True)
        for stem, text in analytics.report_csv_tables(usage).items():
            (target / f"{stem}.csv").write_text(text, encoding="utf-8")
        click.echo(f"csv tables written to {target}", err=True)


if __name__ == "__main__":
    main()
