import json
import subprocess
import sys

import pytest

from liftguard import plant_to_dict

from helpers import double_integrator, stable_two_state, triple_integrator, unstable_scalar


def run_cli(*args, env=None):
    cmd = [sys.executable, "-m", "liftguard", *args]
    return subprocess.run(cmd, capture_output=True, text=True, env=env)


@pytest.fixture(scope="module")
def plant_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("plants")
    paths = {}
    for name, plant, T in [
        ("triple", triple_integrator(), 1.0),
        ("double", double_integrator(), 1.0),
        ("stable", stable_two_state(), 0.5),
        ("unstable", unstable_scalar(), 1.0),
    ]:
        p = root / f"{name}.json"
        p.write_text(json.dumps(plant_to_dict(plant, T=T)))
        paths[name] = str(p)
    fat = root / "fat.json"
    fat.write_text(
        json.dumps(
            {
                "Ac": [[-0.4, 0.2], [0.1, -0.8]],
                "Bc": [[1.0, 0.3], [0.2, 1.0]],
                "Cc": [[1.0, 0.5]],
                "Dc": [[0.0, 0.0]],
                "T": 0.5,
                "name": "fat-plant",
            }
        )
    )
    paths["fat"] = str(fat)
    bad = root / "bad.json"
    bad.write_text("{not json")
    paths["bad"] = str(bad)
    return paths


class TestAnalyze:
    def test_triple_integrator_verdicts(self, plant_files):
        res = run_cli("analyze", "--plant", plant_files["triple"], "--seed", "1")
        assert res.returncode == 0, res.stderr
        doc = json.loads(res.stdout)
        assert doc["single_rate"]["verdict"]["actuator_stealthy"] == "yes"
        assert doc["dual_rate"]["m"] == 4
        assert doc["dual_rate"]["verdict"]["actuator_stealthy"] == "no"

    def test_stable_minimum_phase_all_no(self, plant_files):
        res = run_cli("analyze", "--plant", plant_files["stable"], "--seed", "1")
        doc = json.loads(res.stdout)
        assert doc["single_rate"]["verdict"]["actuator_stealthy"] == "no"
        assert doc["single_rate"]["verdict"]["sensor_stealthy"] == "no"

    def test_fat_plant_masking_verdict(self, plant_files):
        res = run_cli("analyze", "--plant", plant_files["fat"], "--seed", "1")
        doc = json.loads(res.stdout)
        assert doc["single_rate"]["verdict"]["actuator_stealthy"] == "yes"
        assert doc["single_rate"]["verdict"]["actuator_mechanism"] == "fat_plant"

    def test_parse_error_exit_2(self, plant_files):
        res = run_cli("analyze", "--plant", plant_files["bad"])
        assert res.returncode == 2
        err = json.loads(res.stderr)
        assert "error" in err

    def test_missing_file_exit_2(self):
        res = run_cli("analyze", "--plant", "/nonexistent/plant.json")
        assert res.returncode == 2


class TestAttackAndSimulate:
    def test_plan_then_replay(self, plant_files, tmp_path):
        out = str(tmp_path / "out")
        res = run_cli(
            "attack", "--plant", plant_files["triple"], "--theta", "0.01",
            "--seed", "5", "--out", out,
        )
        assert res.returncode == 0, res.stderr
        plan_doc = json.load(open(f"{out}/plan.json"))
        assert plan_doc["plan"]["kind"] == "actuator_zero"
        assert "empirical_peak" in plan_doc["plan"]["calibration"]

        res = run_cli(
            "simulate", "--plant", plant_files["triple"], "--plan", f"{out}/plan.json",
            "--theta", "0.01", "--seed", "5", "--out", out,
        )
        assert res.returncode == 0, res.stderr
        verdict = json.load(open(f"{out}/verdict.json"))
        assert verdict["result"]["verdict"] == "stealthy"
        header = open(f"{out}/trace.csv").readline().strip()
        assert header == "step,substep,time,u_1,y_1,da_1,ds_1,monitor,crossed"

        res = run_cli(
            "simulate", "--plant", plant_files["triple"], "--plan", f"{out}/plan.json",
            "--mode", "dual_rate", "--theta", "0.01", "--seed", "5", "--out", out,
        )
        verdict = json.load(open(f"{out}/verdict.json"))
        assert verdict["result"]["verdict"] == "detected"

    def test_invulnerable_plant_exit_3(self, plant_files):
        res = run_cli("attack", "--plant", plant_files["double"], "--seed", "1")
        assert res.returncode == 3
        err = json.loads(res.stderr)
        assert "not vulnerable" in err["message"]

    def test_sensor_attack(self, plant_files, tmp_path):
        out = str(tmp_path / "sens")
        res = run_cli(
            "attack", "--plant", plant_files["unstable"], "--kind", "sensor",
            "--theta", "0.01", "--seed", "5", "--out", out,
        )
        assert res.returncode == 0, res.stderr
        plan_doc = json.load(open(f"{out}/plan.json"))
        assert plan_doc["plan"]["kind"] == "sensor_pole"
        assert abs(plan_doc["plan"]["zeta"]["re"] - 2.0) < 1e-9

    def test_weight_overrides_accepted(self, plant_files, tmp_path):
        out = str(tmp_path / "w")
        res = run_cli(
            "simulate", "--plant", plant_files["triple"], "--horizon", "20",
            "--Q", "5", "--R", "[[0.5]]", "--seed", "1", "--out", out,
        )
        assert res.returncode == 0, res.stderr
        assert json.load(open(f"{out}/verdict.json"))["result"]["verdict"] == "stealthy"

    def test_simulate_without_plan_is_baseline(self, plant_files, tmp_path):
        out = str(tmp_path / "base")
        res = run_cli(
            "simulate", "--plant", plant_files["stable"], "--horizon", "20",
            "--seed", "1", "--out", out,
        )
        assert res.returncode == 0
        verdict = json.load(open(f"{out}/verdict.json"))
        assert verdict["result"]["verdict"] == "stealthy"
        assert verdict["result"]["max_monitor"] == 0.0


class TestLift:
    def test_lift_report(self, plant_files):
        res = run_cli("lift", "--plant", plant_files["triple"], "--seed", "1")
        assert res.returncode == 0, res.stderr
        doc = json.loads(res.stdout)
        assert doc["lifted"]["m"] == 4
        assert doc["lifted"]["assumptions"]["obs_full_rank"]
        assert doc["lifted"]["shift_consistency"]["consistent"]
        assert len(doc["lifted"]["C"]) == 4  # m stacked output rows

    def test_explicit_bad_m_exit_5(self, plant_files):
        res = run_cli("lift", "--plant", plant_files["triple"], "--m", "2")
        assert res.returncode == 5
        err = json.loads(res.stderr)
        assert "assumptions" in err["message"]


class TestVerify:
    def test_small_run_passes(self):
        res = run_cli("verify", "--trials", "6", "--seed", "2")
        assert res.returncode == 0, res.stderr
        doc = json.loads(res.stdout)
        assert doc["all_passed"] is True
        names = {p["name"] for p in doc["properties"]}
        assert "negative_control_corrupted_lifted_block" in names

    def test_seed_env_fallback(self, plant_files):
        import os

        env = dict(os.environ, LIFTGUARD_SEED="99")
        res = run_cli("analyze", "--plant", plant_files["double"], env=env)
        doc = json.loads(res.stdout)
        assert doc["seed"] == 99


class TestDeterminism:
    @pytest.mark.parametrize("command", ["analyze", "attack", "verify"])
    def test_byte_identical_modulo_timestamp(self, plant_files, command):
        args = {
            "analyze": ("analyze", "--plant", plant_files["triple"]),
            "attack": ("attack", "--plant", plant_files["triple"], "--theta", "0.01"),
            "verify": ("verify", "--trials", "4"),
        }[command]
        outs = []
        for _ in range(2):
            res = run_cli(*args, "--seed", "11")
            assert res.returncode == 0, res.stderr
            doc = json.loads(res.stdout)
            doc.pop("timestamp")
            outs.append(json.dumps(doc, sort_keys=True))
        assert outs[0] == outs[1]
