import json

import pytest

from core.config import (
    BaseKernel,
    CvConfig,
    HashMode,
    HgkConfig,
    LabelMode,
    Settings,
    SynthieParams,
    get_user_settings_file,
    load_settings,
    save_kernel_settings,
)


def test_defaults_without_settings_file(isolated_environment):
    settings = load_settings()
    assert settings.data_dir == str(isolated_environment)
    assert (settings.seed, settings.iterations, settings.base_kernel) == (0, 20, "wl")
    assert settings.hash_mode == "shared"
    assert settings.label_mode == "cont"


def test_environment_overrides_defaults(monkeypatch):
    monkeypatch.setenv("HGK_ITERATIONS", "100")
    monkeypatch.setenv("HGK_BASE", "sp")
    monkeypatch.setenv("HGK_R", "2.5")
    settings = load_settings()
    assert settings.iterations == 100
    assert settings.base_kernel == "sp"
    assert settings.width_r == 2.5


def test_user_settings_override_environment(monkeypatch):
    monkeypatch.setenv("HGK_ITERATIONS", "100")
    path = get_user_settings_file()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"kernel": {"iterations": 7}}), encoding="utf-8")
    assert load_settings().iterations == 7


def test_invalid_enum_value_rejected(monkeypatch):
    monkeypatch.setenv("HGK_HASH_MODE", "sometimes")
    with pytest.raises(ValueError):
        load_settings()


def test_save_kernel_settings_round_trip():
    settings = Settings(seed=5, iterations=9, label_mode="label-cont")
    assert save_kernel_settings(settings)
    loaded = load_settings()
    assert (loaded.seed, loaded.iterations, loaded.label_mode) == (5, 9, "label-cont")


def test_hgk_config_from_settings_coerces_enums():
    cfg = HgkConfig.from_settings(Settings(base_kernel="sp", hash_mode="independent", label_mode="label"))
    assert cfg.base_kernel is BaseKernel.SP
    assert cfg.hash_mode is HashMode.INDEPENDENT
    assert cfg.label_mode is LabelMode.LABEL


@pytest.mark.parametrize(
    "overrides",
    [{"iterations": 0}, {"wl_depth": -1}, {"width_r": 0.0}, {"seed": -3}],
)
def test_hgk_config_validation(overrides):
    with pytest.raises(ValueError):
        HgkConfig(**overrides).validate()


def test_cv_config_validation():
    assert CvConfig().effective_inner_folds == 10
    assert CvConfig(inner_folds=3).effective_inner_folds == 3
    with pytest.raises(ValueError):
        CvConfig(folds=1).validate()
    with pytest.raises(ValueError):
        CvConfig(c_grid=()).validate()
    with pytest.raises(ValueError):
        CvConfig(c_grid=(1.0, -1.0)).validate()


def test_synthie_params_validation():
    with pytest.raises(ValueError):
        SynthieParams(mix_prob=1.5).validate()
    with pytest.raises(ValueError):
        SynthieParams(attr_dim=0).validate()
