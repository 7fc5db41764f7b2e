"""
Runtime configuration for the SimPINNs orbit-restitution toolkit.

Experiment knobs (physics, architecture, optimizer, sweep grids) live in the
pydantic models of ``physics``, ``model``, ``training`` and ``bench``; this
module only holds process-level settings read from the environment.
"""
import os
from dataclasses import dataclass, field
from typing import List, Optional
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        return default


# =============================================================================
# Configuration Dataclasses
# =============================================================================

@dataclass
class RuntimeConfig:
    """Process-level settings"""
    # SIMPINN_OUT overrides ExperimentConfig.output_dir
    output_dir_override: Optional[str] = field(default_factory=lambda: os.getenv("SIMPINN_OUT") or None)
    default_output_dir: str = "./runs"
    # Sweep cells run in a process pool of this size (1 = in-process)
    workers: int = field(default_factory=lambda: _env_int("SIMPINN_WORKERS", 1))
    # Threads rendering the per-sample Jacobians of one batch; results do not depend on it
    render_threads: int = field(default_factory=lambda: _env_int("SIMPINN_RENDER_THREADS", 1))
    log_level: str = field(default_factory=lambda: os.getenv("SIMPINN_LOG_LEVEL", "info").lower())
    run_slow_tests: bool = field(default_factory=lambda: os.getenv("SIMPINN_RUN_SLOW", "0") == "1")


@dataclass
class ObservabilityConfig:
    """LMNR (Laminar) observability configuration."""
    lmnr_enabled: bool = field(default_factory=lambda: bool(os.getenv("LMNR_PROJECT_API_KEY")))
    lmnr_project_api_key: Optional[str] = field(default_factory=lambda: os.getenv("LMNR_PROJECT_API_KEY"))


@dataclass
class Config:
    """Main configuration container"""
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)
    observability: ObservabilityConfig = field(default_factory=ObservabilityConfig)


# Global config instance
config = Config()


# =============================================================================
# Validation
# =============================================================================

def validate_config() -> List[str]:
    """Validate configuration and return list of issues"""
    issues = []

    if config.runtime.workers < 1:
        issues.append(f"SIMPINN_WORKERS must be >= 1 (got {config.runtime.workers})")

    if config.runtime.render_threads < 1:
        issues.append(f"SIMPINN_RENDER_THREADS must be >= 1 (got {config.runtime.render_threads})")

    if config.runtime.log_level not in ("debug", "info", "warning", "error"):
        issues.append(f"SIMPINN_LOG_LEVEL must be debug|info|warning|error (got {config.runtime.log_level!r})")

    out = config.runtime.output_dir_override
    if out and os.path.exists(out) and not os.path.isdir(out):
        issues.append(f"SIMPINN_OUT points at a file, not a directory: {out}")

    return issues


if __name__ == "__main__":
    print("=== SimPINNs Runtime Configuration ===\n")

    issues = validate_config()
    if issues:
        print("Configuration issues:")
        for issue in issues:
            print(f"   - {issue}")
    else:
        print("Core configuration valid")

    print(f"\n   Output dir: {config.runtime.output_dir_override or config.runtime.default_output_dir}")
    print(f"   Workers: {config.runtime.workers}")
    print(f"   Render threads: {config.runtime.render_threads}")
    print(f"   Log level: {config.runtime.log_level}")
    from infrastructure.observability import get_observability_status

    print(f"   Tracing: {get_observability_status()}")
