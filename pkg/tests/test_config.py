import json
import logging

import pytest
from pydantic import ValidationError

from deh_sim.config import JSONFormatter, Settings, validate_settings
from deh_sim.exceptions import ConfigError
from deh_sim.models import Envelope, EnvelopeKind, QubitParams, RunConfig


def test_environment_overrides_defaults(monkeypatch):
    monkeypatch.setenv("DEH_PHI_GRID", "32")
    monkeypatch.setenv("DEH_LOG_FORMAT", "json")
    current = Settings()
    assert current.phi_grid == 32
    assert current.log_format == "json"


def test_validate_settings_lists_every_problem():
    with pytest.raises(ConfigError) as excinfo:
        validate_settings(Settings(log_level="LOUD", steps_per_period=4, jobs=0))
    message = str(excinfo.value)
    assert "log level" in message
    assert "Steps per period" in message
    assert "Jobs" in message


def test_json_formatter():
    record = logging.LogRecord("deh_sim.qdyn", logging.INFO, __file__, 10, "flip %s", ("done",), None)
    entry = json.loads(JSONFormatter().format(record))
    assert entry["message"] == "flip done"
    assert entry["level"] == "INFO"
    assert entry["logger"] == "deh_sim.qdyn"


def test_phase_is_wrapped():
    assert QubitParams(gap=1.0, amp=0.1, omega=1.0, phase=-0.5).phase == pytest.approx(6.283185307179586 - 0.5)
    assert QubitParams(gap=1.0, amp=0.1, omega=1.0, phase=6.283185307179586).phase == 0.0


def test_envelope_parsing():
    assert Envelope.parse("const", 0.1).kind == EnvelopeKind.CONSTANT
    ramp = Envelope.parse("ramp:0.2", 0.1)
    assert ramp.ramp_fraction == 0.2
    beat = Envelope.parse("beat:1.05,0.95", 0.1)
    assert beat.carrier(1.0) == pytest.approx(1.0)
    assert beat.half_difference == pytest.approx(0.05)
    with pytest.raises(ValueError):
        Envelope.parse("square", 0.1)


def test_run_config_defaults_to_resonance():
    cfg = RunConfig(command="simulate", gap=1.3)
    assert cfg.drive_omega == 1.3
    assert cfg.qubit().is_resonant()
    assert cfg.t_final == "auto"


def test_levels_must_describe_a_qubit_or_qutrit():
    assert RunConfig(command="vu", levels=[0.0, 1.0], target=1).levels == [0.0, 1.0]
    with pytest.raises(ValidationError):
        RunConfig(command="vu", levels=[0.0, 1.0, 2.0, 3.0])
    with pytest.raises(ValidationError):
        RunConfig(command="vu", levels=[0.0, 1.0])
