from ._core import (
    ConfigError,
    ProtocolError,
    analyze,
    derive_seed,
    envs,
    pass_rate,
    percent_label,
    render_env_prompt,
    rollout,
    run_pipeline,
    train,
    verify_env,
)

__all__ = [
    "ConfigError",
    "ProtocolError",
    "analyze",
    "derive_seed",
    "envs",
    "pass_rate",
    "percent_label",
    "render_env_prompt",
    "rollout",
    "run_pipeline",
    "train",
    "verify_env",
]
