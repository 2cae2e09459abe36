import json

import pytest
from click.testing import CliRunner

from medledger.cli import main
from medledger.consensus import NetworkConfig, FaultSpec


@pytest.fixture
def runner():
    return CliRunner()


class TestKeygen:
    def test_same_seed_same_keys(self, runner, tmp_path):
        seed = "ab" * 32
        results = []
        for name in ("a.key", "b.key"):
            result = runner.invoke(
                main,
                ["keygen", "--seed", seed, "--out", str(tmp_path / name),
                 "--passphrase", "open sesame"],
            )
            assert result.exit_code == 0, result.output
            results.append(result.output.splitlines()[:2])
        assert results[0] == results[1]

    def test_key_file_loads_back(self, runner, tmp_path):
        from medledger.crypto import load_key_file

        result = runner.invoke(
            main,
            ["keygen", "--out", str(tmp_path / "k.key"), "--passphrase", "open sesame"],
        )
        assert result.exit_code == 0
        public = result.output.splitlines()[0].split()[1]
        bundle = load_key_file(tmp_path / "k.key", "open sesame")
        assert bundle.signing.public_hex == public


class TestSim:
    def test_run_then_check_crash_scenario(self, runner, tmp_path):
        scenario = NetworkConfig(
            n=4, heights=2, seed=9, block_time_ms=200,
            faults={1: FaultSpec(kind="crash", after_steps=0)},
        )
        scenario_path = tmp_path / "scenario.json"
        scenario.save(scenario_path)
        trace_path = tmp_path / "run.trace"
        result = runner.invoke(
            main, ["sim", "run", str(scenario_path), "--out", str(trace_path)]
        )
        assert result.exit_code == 0, result.output
        assert trace_path.exists()

        result = runner.invoke(main, ["sim", "check", str(trace_path)])
        assert result.exit_code == 0, result.output
        assert "safety: pass" in result.output

    def test_check_flags_tampered_trace(self, runner, tmp_path):
        scenario = NetworkConfig(n=4, heights=1, seed=2)
        scenario_path = tmp_path / "scenario.json"
        scenario.save(scenario_path)
        trace_path = tmp_path / "run.trace"
        assert runner.invoke(
            main, ["sim", "run", str(scenario_path), "--out", str(trace_path)]
        ).exit_code == 0
        lines = trace_path.read_text().splitlines()
        doctored = []
        for line in lines:
            event = json.loads(line)
            if event.get("type") == "commit":
                block = event["block"]
                cert = dict(block["commit_certificate"])
                cert["precommits"] = cert["precommits"][:2]
                block = dict(block, commit_certificate=cert)
                event = dict(event, block=block)
            doctored.append(json.dumps(event, sort_keys=True))
        trace_path.write_text("\n".join(doctored) + "\n")
        result = runner.invoke(main, ["sim", "check", str(trace_path)])
        assert result.exit_code == 1
        assert "certificate-soundness: FAIL" in result.output


class TestChain:
    @pytest.fixture
    def populated_dir(self, runner, tmp_path):
        key_path = tmp_path / "op.key"
        assert runner.invoke(
            main, ["keygen", "--out", str(key_path), "--passphrase", "pp"]
        ).exit_code == 0
        data_dir = tmp_path / "data"
        (data_dir / "cluster").mkdir(parents=True)
        (data_dir / "cluster" / "cluster.json").write_text(
            json.dumps({"n": 1, "mode": "pow", "seed": 1, "block_time_ms": 100,
                        "pow_bits": 4})
        )
        result = runner.invoke(
            main,
            ["tx", "submit", "--data-dir", str(data_dir), "--key", str(key_path),
             "--passphrase", "pp", "--asset", '{"type": "demo"}'],
        )
        assert result.exit_code == 0, result.output
        return data_dir

    def test_tx_submit_and_inspect(self, runner, populated_dir):
        result = runner.invoke(main, ["chain", "inspect", "--data-dir", str(populated_dir)])
        assert result.exit_code == 0, result.output
        lines = result.output.strip().splitlines()
        assert lines[0].startswith("height 0")
        assert "txs 1" in lines[1]

    def test_verify_clean_chain(self, runner, populated_dir):
        result = runner.invoke(main, ["chain", "verify", "--data-dir", str(populated_dir)])
        assert result.exit_code == 0, result.output
        assert "node0: ok" in result.output

    def test_verify_hex_edited_dump(self, runner, populated_dir, tmp_path):
        chain_file = populated_dir / "cluster" / "node0" / "chain.ndjson"
        lines = chain_file.read_text().splitlines()
        tampered = json.loads(lines[1])
        tampered["txs"][0]["asset"]["data"]["type"] = "edited"
        dump = tmp_path / "edited.ndjson"
        dump.write_text("\n".join([lines[0], json.dumps(tampered, sort_keys=True)]) + "\n")
        result = runner.invoke(main, ["chain", "verify", "--dump", str(dump), "--mode", "pow"])
        assert result.exit_code == 1
        assert "first invalid height 1" in result.output

    def test_usage_error_exit_code(self, runner):
        result = runner.invoke(main, ["chain", "verify"])
        assert result.exit_code == 2
