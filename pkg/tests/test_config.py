import math

import pytest

from cycprop.config import ConfigError, Hyperparams, dump_config, load_config, parse_config


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "c.conf"
    path.write_text("")
    hp = load_config(path)
    assert hp == Hyperparams()
    assert (hp.alpha, hp.mu, hp.delta, hp.lambda0, hp.d) == (0.1, 10.0, 0.1, 0.1, 64)
    assert (hp.hidden_dim, hp.neighbor_sample_size, hp.s_neg) == (128, 10, 10)


def test_negative_alpha_rejected():
    with pytest.raises(ConfigError, match="alpha"):
        parse_config("alpha = -1")


def test_multiple_assignments_on_one_line():
    hp = parse_config("r = 0.5, s_neg = 10\n# comment\nT1 = 3")
    assert hp.r == 0.5 and hp.s_neg == 10 and hp.T1 == 3
    assert hp.mu == Hyperparams().mu


def test_unknown_key_lists_valid_keys():
    with pytest.raises(ConfigError, match="alpha"):
        parse_config("gamma = 2")


def test_keys_are_case_sensitive():
    with pytest.raises(ConfigError):
        parse_config("Alpha = 0.2")


@pytest.mark.parametrize("text", ["r = 1.5", "s_neg = 0", "variant = cnn", "delta_mode = auto", "T2 = x"])
def test_invalid_values(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_lambda_cap_resolution():
    assert math.isclose(Hyperparams().resolved_lambda_cap(7), 0.9 * math.log(7))
    assert Hyperparams(lambda_cap=0.4).resolved_lambda_cap(7) == 0.4


def test_dump_round_trip():
    hp = Hyperparams(alpha=0.3, variant="lp-only", lambda_cap=0.7, normalize_attrs=True)
    assert parse_config(dump_config(hp)) == hp
    assert parse_config(dump_config(Hyperparams())) == Hyperparams()
