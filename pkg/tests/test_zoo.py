"""Module-zoo contracts: registry, shapes, parameter counts, perfect module."""

import numpy as np
import pytest

from touchlab import zoo
from touchlab.diffcore import Adam, t_sum
from touchlab.errors import ConfigurationError, InputError
from touchlab.zoo import (
    ARCHITECTURES,
    ModuleConfig,
    ReMaPModule,
    build_ablation,
    build_conv_ems,
    build_ems,
    count_parameters,
    ems_twin_from_boundary,
    normalize_coord,
    perfect_sr_module,
    predict_reward,
    widths_for,
)


def make_visual(config, rng):
    return rng.normal(size=config.visual_width)


def make_actions(config, rng, n=16):
    return rng.uniform(-1, 1, size=(n, config.action_width))


def test_registry_has_24_architectures():
    assert len(ARCHITECTURES) == 24
    assert "ems" in ARCHITECTURES
    assert "late-relu-large" in ARCHITECTURES
    assert "no-symm" in ARCHITECTURES


def test_invalid_architecture_rejected():
    with pytest.raises(ConfigurationError):
        zoo.parse_architecture("mid-bottleneck")
    with pytest.raises(ConfigurationError):
        zoo.ArchitectureId("ems", "late", "full", "full", "cres", "ems")


def test_width_doubling_rules():
    cfg = ModuleConfig(arch="ems", widths=(8, 8, 8), scene_width=16)
    module = build_ems(cfg)
    # CReLU doubles the bottleneck; CReS quadruples each stack layer.
    assert module.output_widths[0] == 16
    assert module.output_widths[1] == 32
    assert module.output_widths[2] == 32
    assert module.output_widths[-1] == cfg.k_f


def test_all_architectures_forward_smoke():
    rng = np.random.default_rng(0)
    for name in ARCHITECTURES:
        cfg = ModuleConfig(arch=name, widths=(4, 4, 4), scene_width=12, seed=1)
        module = build_ablation(cfg)
        visual = make_visual(cfg, rng)
        actions = make_actions(cfg, rng, n=7)
        out = module.forward(visual, actions)
        assert out.data.shape == (7, cfg.k_f)
        assert np.all(np.isfinite(out.data))


def test_parameter_count_formula_matches_built_modules():
    rng = np.random.default_rng(1)
    for name in ARCHITECTURES:
        widths = tuple(int(w) for w in rng.integers(2, 9, size=3))
        cfg = ModuleConfig(arch=name, widths=widths, scene_width=10, k_b=1, seed=2)
        assert count_parameters(cfg) == ReMaPModule(cfg).n_params()
    conv_cfg = ModuleConfig(
        arch="ems", widths=(6, 6, 6), scene_width=10, conv=True,
        spatial_hw=4, spatial_channels=3, conv_widths=(5, 5, 5),
    )
    assert count_parameters(conv_cfg) == ReMaPModule(conv_cfg).n_params()


def test_candidate_independence_and_purity():
    cfg = ModuleConfig(arch="ems", widths=(4, 4, 4), scene_width=12, seed=3)
    module = build_ems(cfg)
    rng = np.random.default_rng(4)
    visual = make_visual(cfg, rng)
    actions = make_actions(cfg, rng, n=10)
    out = module.predict(visual, actions)
    perm = rng.permutation(10)
    assert np.array_equal(module.predict(visual, actions[perm]), out[perm])
    doubled = np.vstack([actions, actions[:1]])
    out2 = module.predict(visual, doubled)
    assert np.array_equal(out2[-1], out2[0])


def test_forward_input_validation():
    cfg = ModuleConfig(arch="ems", widths=(4, 4, 4), scene_width=12)
    module = build_ems(cfg)
    rng = np.random.default_rng(5)
    with pytest.raises(InputError):
        module.forward(rng.normal(size=5), make_actions(cfg, rng))
    with pytest.raises(InputError):
        module.forward(make_visual(cfg, rng), rng.normal(size=(4, 3)))


def test_build_ems_rejects_non_ems():
    with pytest.raises(ConfigurationError):
        build_ems(ModuleConfig(arch="no-symm", widths=(4, 4, 4)))


def test_task_width_tables():
    assert widths_for("ems", "sr2") == (8, 8, 8)
    assert widths_for("ems", "mts2-stationary") == (32, 32, 32)
    assert widths_for("ems", "loc") == (128, 128, 128)
    assert widths_for("late-relu-medium", "sr2") == (128, 128, 128)
    assert widths_for("late-relu-large", "loc") == (1024, 1024, 1024)


def test_small_size_matches_ems_parameter_count():
    for act in ("relu", "tanh", "crelu"):
        widths = widths_for(f"late-{act}-small", "sr2")
        small = ModuleConfig(arch=f"late-{act}-small", widths=widths)
        ems_ref = ModuleConfig(arch="ems", widths=(8, 8, 8))
        ratio = count_parameters(small) / count_parameters(ems_ref)
        assert 0.95 <= ratio <= 1.05


def test_conv_ems_tiling_arithmetic():
    cfg = ModuleConfig(
        arch="ems", widths=(128, 128, 128), scene_width=128, k_b=0,
        conv=True, spatial_hw=8, spatial_channels=32, conv_widths=(128, 128, 128),
    )
    module = build_conv_ems(cfg)
    # 8x8x32 map + one tiled 128-wide scene vector = 8x8x160 bottleneck input.
    assert module.params["conv0_w"].data.shape == (160, 128)
    rng = np.random.default_rng(6)
    spatial = rng.normal(size=(8, 8, 32))
    scenes = rng.normal(size=(1, 128))
    out = module.predict((spatial, scenes, np.ones(1)), make_actions(cfg, rng, n=5))
    assert out.shape == (5, cfg.k_f)


def test_conv_ems_encoder_mismatch_rejected():
    from touchlab.backbone import EncoderSpec

    cfg = ModuleConfig(
        arch="ems", widths=(8, 8, 8), scene_width=64, conv=True,
        spatial_hw=8, spatial_channels=32, conv_widths=(16, 16, 16),
    )
    good = EncoderSpec(input_hw=64, conv_channels=(16, 32, 32), scene_width=64)
    build_conv_ems(cfg, encoder_spec=good)
    bad = EncoderSpec(input_hw=64, conv_channels=(16, 32, 32), scene_width=128)
    with pytest.raises(ConfigurationError):
        build_conv_ems(cfg, encoder_spec=bad)


def test_frozen_module_ignores_optimizer():
    cfg = ModuleConfig(arch="ems", widths=(4, 4, 4), scene_width=12, seed=7)
    module = build_ems(cfg).freeze()
    before = module.weight_hash()
    assert module.trainable_params() == []
    rng = np.random.default_rng(8)
    out = module.forward(make_visual(cfg, rng), make_actions(cfg, rng))
    t_sum(out).backward()
    opt = Adam([([p for p in module.params.values()], 1e-3)])
    opt.step()
    assert module.weight_hash() == before


def test_module_checkpoint_round_trip(tmp_path):
    cfg = ModuleConfig(arch="late-tanh-medium", widths=(16, 16, 16), scene_width=12, seed=9)
    module = build_ablation(cfg)
    path = tmp_path / "module.npz"
    module.save(path)
    loaded = ReMaPModule.load(path)
    assert loaded.weight_hash() == module.weight_hash()
    assert loaded.config == cfg
    rng = np.random.default_rng(10)
    visual = make_visual(cfg, rng)
    actions = make_actions(cfg, rng)
    assert np.array_equal(loaded.predict(visual, actions), module.predict(visual, actions))


def test_init_statistics():
    cfg = ModuleConfig(arch="late-relu-large", widths=(512, 512, 512), scene_width=128, seed=11)
    module = build_ablation(cfg)
    w = module.params["w1"].data
    assert abs(w.mean()) < 1e-3
    assert abs(w.std() - 0.01) < 1e-3


def test_normalize_coord_never_zero():
    vals = [normalize_coord(i, 64) for i in range(64)]
    assert all(v != 0 for v in vals)
    assert vals[0] == pytest.approx(-0.984375)
    assert vals[63] == pytest.approx(0.984375)


def boundary_config(scene_width=6):
    return ModuleConfig(arch="ems", widths=(1, 2), scene_width=scene_width)


def test_perfect_module_sign_cases():
    cfg = boundary_config()
    w = np.array([1.0, 0, 0, 0, 0, 0])
    module = perfect_sr_module(w, cfg)
    psi_pos = np.array([2.0, 0, 0, 0, 0, 0])
    psi_neg = -psi_pos
    size = 64
    for psi, good_x in ((psi_pos, 60), (psi_neg, 3)):
        assert predict_reward(w, psi, (good_x, 10), size) == 1.0
        assert predict_reward(w, psi, (63 - good_x, 10), size) == 0.0


def test_perfect_module_ignores_y():
    cfg = boundary_config()
    w = np.array([1.0, 0, 0, 0, 0, 0])
    module = perfect_sr_module(w, cfg)
    visual = np.zeros(cfg.visual_width)
    visual[cfg.k_b * 6 : (cfg.k_b + 1) * 6] = [2.0, 0, 0, 0, 0, 0]
    base = np.zeros((3, cfg.action_width))
    base[:, 3 * cfg.k_b] = 0.5
    base[:, 3 * cfg.k_b + 1] = [-0.9, 0.0, 0.9]
    out = module.predict(visual, base)
    assert np.allclose(out[0], out[1]) and np.allclose(out[1], out[2])


def test_ems_twin_agrees_with_analytic_on_sign_grid():
    cfg = boundary_config()
    w = np.array([3.0, -1.0, 0, 0, 0, 0.5])
    analytic = perfect_sr_module(w, cfg)
    twin = ems_twin_from_boundary(w, cfg)
    rng = np.random.default_rng(12)
    for _ in range(200):
        visual = np.zeros(cfg.visual_width)
        visual[cfg.k_b * 6 : (cfg.k_b + 1) * 6] = rng.normal(size=6)
        actions = rng.uniform(-1, 1, size=(9, cfg.action_width))
        a = analytic.predict(visual, actions)[:, 0]
        t = twin.predict(visual, actions)[:, 0]
        # Identical threshold structure: both sit above -offset exactly when
        # the product of boundary score and touch side is positive.
        assert np.array_equal(a > -3.0 + 1e-12, t > -3.0 + 1e-12)
    # Zero cases: a_x = 0 or w.psi = 0 leave both exactly at the offset.
    visual = np.zeros(cfg.visual_width)
    actions = np.zeros((1, cfg.action_width))
    assert analytic.predict(visual, actions)[0, 0] == -3.0
    assert twin.predict(visual, actions)[0, 0] == -3.0


def test_ems_twin_matches_product_exactly_on_reward_side():
    cfg = boundary_config()
    w = np.array([2.0, 0, 0, 0, 0, 0])
    twin = ems_twin_from_boundary(w, cfg)
    visual = np.zeros(cfg.visual_width)
    visual[cfg.k_b * 6] = 1.5  # p = 3.0
    actions = np.zeros((2, cfg.action_width))
    actions[:, 3 * cfg.k_b] = [0.5, -0.25]
    out = twin.predict(visual, actions)
    assert out[0, 0] == pytest.approx(30.0 * 3.0 * 0.5 - 3.0, abs=1e-9)
    assert out[1, 0] == pytest.approx(30.0 * 3.0 * -0.25 - 3.0, abs=1e-9)
    assert np.all(out[:, 1] == 30.0)
