"""Command-line client for the verification service.

Every subcommand talks HTTP to the service app; by default an in-process
instance handles the calls, while --server points at a remote one.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from .pipeline import PipelineConfig
from .tomography import read_counts_jsonl, write_counts_jsonl


class ServiceClient:
    def __init__(self, server: str | None):
        if server:
            import httpx

            self._http = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # in-process transport; the host-library deprecation chatter
                # is not actionable for CLI users
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._http = TestClient(create_app(), raise_server_exceptions=False)

    def _unwrap(self, response):
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise click.ClickException(f"{detail}")
        return response.json()

    def get(self, path: str):
        return self._unwrap(self._http.get(path))

    def post(self, path: str, payload: dict):
        return self._unwrap(self._http.post(path, json=payload))


def _parse_qubits(_ctx, _param, value):
    if value is None:
        return None
    try:
        return [int(tok) for tok in value.replace(" ", "").split(",") if tok]
    except ValueError:
        raise click.BadParameter("expected a comma-separated list of integers")


def _write_json(data, out: str | None):
    text = json.dumps(data, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


ring_option = click.option("-n", "--ring-size", "n", type=int, default=None)
map_option = click.option(
    "--qubit-map", callback=_parse_qubits, default=None, help="comma-separated labels"
)
device_option = click.option("--device", default=None, help='built-in name or JSON path')


@click.group()
@click.option("--server", default=None, help="service URL; in-process when omitted")
@click.pass_context
def main(ctx, server):
    """Verify genuine multipartite entanglement of ring graph states."""
    ctx.obj = ServiceClient(server)


@main.command()
@ring_option
@map_option
@device_option
@click.option("--out", default=None, help="circuit JSON path (stdout otherwise)")
@click.pass_obj
def synth(client, n, qubit_map, device, out):
    """Emit the optimized ring-preparation circuit."""
    payload = {}
    if n is not None:
        payload["n"] = n
    if qubit_map is not None:
        payload["qubit_map"] = qubit_map
    if device is not None:
        payload["device"] = device
    _write_json(client.post("/synth", payload), out)


@main.command()
@ring_option
@map_option
@device_option
@click.option("--shots", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--noise-1q", type=float, default=None)
@click.option("--noise-2q", type=float, default=None)
@click.option("--readout", type=float, default=None)
@click.option("--subsystem", callback=_parse_qubits, default=None)
@click.option("--out", required=True, help="counts JSONL path")
@click.pass_obj
def simulate(client, n, qubit_map, device, shots, seed, noise_1q, noise_2q, readout, subsystem, out):
    """Sample tomography counts for one chain or every chain."""
    payload = {}
    for key, value in (
        ("n", n),
        ("qubit_map", qubit_map),
        ("device", device),
        ("shots", shots),
        ("seed", seed),
        ("subsystem", subsystem),
    ):
        if value is not None:
            payload[key] = value
    if noise_1q is not None or noise_2q is not None or readout is not None:
        payload["noise"] = {
            "error_1q": noise_1q or 0.0,
            "error_2q": noise_2q or 0.0,
            "readout": readout or 0.0,
        }
    records = client.post("/simulate", payload)["records"]
    write_counts_jsonl(records, out)
    click.echo(f"wrote {len(records)} records to {out}")


@main.command()
@click.argument("counts", type=click.Path(exists=True))
@click.pass_obj
def ingest(client, counts):
    """Validate a counts file and summarize its datasets."""
    records = read_counts_jsonl(counts)
    summary = client.post("/ingest", {"records": records})
    for entry in summary["datasets"]:
        sub = ",".join(f"q{q}" for q in entry["subsystem"])
        click.echo(
            f"subsystem {sub}: {entry['settings']} settings, "
            f"{entry['min_shots']:.0f}..{entry['max_shots']:.0f} shots"
        )


@main.command()
@click.argument("counts", type=click.Path(exists=True))
@click.option("--out", required=True, help="directory for reconstruction JSONs")
@click.pass_obj
def reconstruct(client, counts, out):
    """Estimate each chain's density matrix from a counts file."""
    records = read_counts_jsonl(counts)
    result = client.post("/reconstruct", {"records": records})
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for rec in result["reconstructions"]:
        label = "-".join(f"q{q:02d}" for q in rec["subsystem"])
        path = out_dir / f"reconstruction-{label}.json"
        path.write_text(json.dumps(rec, sort_keys=True, indent=2) + "\n")
        click.echo(f"wrote {path}")


@main.command()
@click.argument("counts", type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["nn", "dist2", "dist3", "verdict", "fidelity"]), required=True)
@ring_option
@map_option
@click.option("--resamples", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", default=None, help="result JSON path (stdout otherwise)")
@click.pass_obj
def analyze(client, counts, mode, n, qubit_map, resamples, seed, out):
    """Run one analysis protocol over ingested counts."""
    payload = {"mode": mode, "records": read_counts_jsonl(counts)}
    for key, value in (
        ("n", n),
        ("qubit_map", qubit_map),
        ("resamples", resamples),
        ("seed", seed),
    ):
        if value is not None:
            payload[key] = value
    _write_json(client.post("/analyze", payload), out)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@ring_option
@map_option
@device_option
@click.option("--seed", type=int, default=None)
@click.option("--shots", type=int, default=None)
@click.option("--resamples", type=int, default=None)
@click.option("--noise-1q", "error_1q", type=float, default=None)
@click.option("--noise-2q", "error_2q", type=float, default=None)
@click.option("--readout", type=float, default=None)
@click.option("--out", default=None, help="artifact directory")
@click.pass_obj
def pipeline(client, config_path, n, qubit_map, device, seed, shots, resamples, error_1q, error_2q, readout, out):
    """Simulate, reconstruct, and analyze a full ring; write all artifacts."""
    base = PipelineConfig.from_file(config_path) if config_path else PipelineConfig()
    config = base.merged(
        n=n,
        qubit_map=tuple(qubit_map) if qubit_map else None,
        device=device,
        seed=seed,
        shots=shots,
        resamples=resamples,
        error_1q=error_1q,
        error_2q=error_2q,
        readout=readout,
        out=out,
    )
    result = client.post("/pipeline", config.to_json())
    report = result["report"]
    verdict = report["verdict"]
    click.echo(f"verdict: {verdict['status']}")
    for est in report["estimates"]:
        pair = "-".join(f"q{q:02d}" for q in est["pair"])
        click.echo(
            f"  {pair}: negativity {est['value']:.4f} "
            f"[{est['ci_low']:.4f}, {est['ci_high']:.4f}]"
        )
    if verdict["hypotheses"]:
        click.echo("surviving separation hypotheses:")
        for hyp, hint in zip(verdict["hypotheses"], verdict["suggestions"]):
            a = ",".join(f"q{q}" for q in hyp["block_a"])
            b = ",".join(f"q{q}" for q in hyp["block_b"])
            chain = "-".join(f"q{q}" for q in hint["chain"])
            click.echo(f"  {{{a}}} | {{{b}}}  (try a pt-test on {chain})")
    click.echo(f"fidelity upper bound: {report['fidelity_upper_bound']:.4f}")
    click.echo(f"report: {result['paths']['report']}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
