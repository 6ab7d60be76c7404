import pytest

from fgo.config import (
    PRESETS,
    RunConfig,
    apply_assignment,
    apply_preset,
    load_config,
    parse_config_text,
)
from fgo.grid import SQRT2


class TestDefaults:
    def test_default_weights_are_reference(self):
        w = RunConfig().weights()
        assert (w.alpha_ref, w.alpha_sa, w.alpha_tj) == (1.0, 0.0, 0.0)
        assert w.w_opp == 1.0
        assert w.feature_weights == (1.0, 1.0, 1.0)
        assert w.top_layers_only is None

    def test_default_pipeline_params(self):
        p = RunConfig().pipeline_params()
        assert p.n_scales == 10
        assert p.pyramid_factor == SQRT2
        assert p.gabor.sigma == 2.24
        assert p.dog.sigma_in == 0.90
        assert p.context.ring_form == "cosine"

    def test_preset_table(self):
        assert set(PRESETS) == {"reference", "with-sa", "with-tj", "with-both"}
        for triple in PRESETS.values():
            assert sum(triple) == pytest.approx(1.0)

    def test_apply_preset(self):
        cfg = apply_preset(RunConfig(), "with-both")
        assert (cfg.alpha_ref, cfg.alpha_sa, cfg.alpha_tj) == (0.05, 0.15, 0.80)
        with pytest.raises(ValueError):
            apply_preset(RunConfig(), "nope")


class TestAssignments:
    def test_snake_and_camel_spell_same_key(self):
        a = apply_assignment(RunConfig(), "alpha_sa", "0.65")
        b = apply_assignment(RunConfig(), "alphaSa", "0.65")
        assert a == b
        assert a.alpha_sa == 0.65

    def test_top_layers_only_optional_int(self):
        cfg = apply_assignment(RunConfig(), "topLayersOnly", "2")
        assert cfg.top_layers_only == 2
        cfg = apply_assignment(cfg, "topLayersOnly", "none")
        assert cfg.top_layers_only is None

    def test_int_fields_coerced(self):
        cfg = apply_assignment(RunConfig(), "nScales", "6")
        assert cfg.n_scales == 6 and isinstance(cfg.n_scales, int)

    def test_string_field(self):
        cfg = apply_assignment(RunConfig(), "ringForm", "gaussian")
        assert cfg.ring_form == "gaussian"

    def test_sa_prefix_routes_to_nested_block(self):
        cfg = apply_assignment(RunConfig(), "sa_min_size", "11")
        assert cfg.sa.min_size == 11
        assert cfg.sa.max_size == RunConfig().sa.max_size

    def test_tj_prefix_routes_to_nested_block(self):
        cfg = apply_assignment(RunConfig(), "tjInfluenceRadius", "9")
        assert cfg.tj.influence_radius == 9

    def test_preset_key(self):
        cfg = apply_assignment(RunConfig(), "preset", "with-sa")
        assert (cfg.alpha_ref, cfg.alpha_sa) == (0.35, 0.65)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError):
            apply_assignment(RunConfig(), "bogus", "1")
        with pytest.raises(ValueError):
            apply_assignment(RunConfig(), "sa_bogus", "1")
        with pytest.raises(ValueError):
            apply_assignment(RunConfig(), "sa", "1")

    def test_invalid_value_surfaces(self):
        with pytest.raises(ValueError):
            apply_assignment(RunConfig(), "nScales", "many")


class TestFiles:
    def test_parse_with_comments_and_blanks(self):
        cfg = parse_config_text(
            """
            # weights
            preset = with-both
            wOpp = 0.9   # inline comment
            nScales = 8

            sa_gamma = 1.0
            """
        )
        assert cfg.alpha_tj == 0.80
        assert cfg.w_opp == 0.9
        assert cfg.n_scales == 8
        assert cfg.sa.gamma == 1.0

    def test_error_carries_line_number(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_config_text("alphaRef = 1.0\nnot a pair\n")
        with pytest.raises(ValueError, match="line 3"):
            parse_config_text("\n\nbogus = 1\n")

    def test_later_lines_win(self):
        cfg = parse_config_text("nScales = 4\nnScales = 7\n")
        assert cfg.n_scales == 7

    def test_load_config_reads_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("preset = reference\nseed = 42\n")
        cfg = load_config(path)
        assert cfg.alpha_ref == 1.0
        assert cfg.seed == 42

    def test_base_config_extended(self):
        base = apply_preset(RunConfig(), "with-sa")
        cfg = parse_config_text("nScales = 5\n", base)
        assert cfg.alpha_sa == 0.65 and cfg.n_scales == 5


class TestSeed:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("FGO_SEED", "99")
        assert RunConfig(seed=3).resolved_seed() == 99

    def test_without_env_uses_field(self, monkeypatch):
        monkeypatch.delenv("FGO_SEED", raising=False)
        assert RunConfig(seed=3).resolved_seed() == 3
