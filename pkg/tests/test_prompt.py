from string import Template

from conftest import FIXTURE_NAMES, load
from safeplan.noise import NoiseLevel, inject
from safeplan.prompt import audit_prompt, danger_only_tokens, parse_prompt, render_prompt

import pytest


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_prompt_audit_clean(name):
    b = load(name)
    assert audit_prompt(render_prompt(b), b) == []


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_prompt_recovers_basic_problem(name):
    b = load(name)
    assert parse_prompt(render_prompt(b)) == b.basic


def test_knife_prompt_contents(knife):
    p = render_prompt(knife)
    assert "child_near(table)" in p
    assert "PLACE_ON(?o - item, ?s - surface)" in p
    assert "danger" not in p.lower()


def test_audit_catches_leak(knife):
    tokens = danger_only_tokens(knife)
    assert "danger" in tokens and "d_max" in tokens
    leaky = Template(render_prompt(knife) + "\nKeep danger at most $$d_max.\n")
    assert "danger" in audit_prompt(render_prompt(knife, leaky), knife)


def test_custom_template(knife):
    assert render_prompt(knife, "Goal: $goal") == "Goal: - placed(knife)\n- not open(drawer)"


def test_noise_grows_prompt(knife):
    big = inject(knife, NoiseLevel(64, 0))
    assert len(render_prompt(big)) > 3 * len(render_prompt(knife))
    assert audit_prompt(render_prompt(big), big) == []
