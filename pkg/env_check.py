#!/usr/bin/env python3
"""
Environment Check for the Local Learning Engine

Runs quick diagnostics before a long experiment: package imports, CPU cores
available to the pipeline workers, the run configuration file, the
finite-difference check of the tensor engine, and a tiny pipeline run compared
bit for bit with the single-thread delayed-update schedule.
"""

import importlib
import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

REQUIRED_PACKAGES = ["numpy", "pandas", "pydantic", "dotenv", "toml", "psutil"]
OPTIONAL_PACKAGES = ["streamlit", "pytest"]


def check_packages():
    """Import every package the engine, dashboard and tests need."""
    print("📦 Checking packages...")
    print("-" * 50)
    issues = []
    for name in REQUIRED_PACKAGES + OPTIONAL_PACKAGES:
        try:
            module = importlib.import_module(name)
            print(f"✅ {name} {getattr(module, '__version__', '')}".rstrip())
        except ImportError as e:
            if name in REQUIRED_PACKAGES:
                issues.append(f"Missing required package {name}: {e}")
                print(f"❌ {name}: not installed")
            else:
                print(f"⚠️  {name}: not installed (only needed for the dashboard or the tests)")
    return issues


def check_cores():
    """Report the cores the pipeline workers can spread over."""
    print("\n🧮 Checking CPU cores...")
    print("-" * 50)
    import psutil

    logical = psutil.cpu_count(logical=True) or 1
    physical = psutil.cpu_count(logical=False) or logical
    print(f"✅ {physical} physical / {logical} logical cores")
    if physical < 2:
        print("⚠️  One physical core: pipeline mode still runs, but shows no speedup")
    return []


def check_config(path):
    """Validate a run configuration file when one is given or present."""
    print("\n📝 Checking run configuration...")
    print("-" * 50)
    if path is None:
        path = "run.toml" if os.path.exists("run.toml") else None
    if path is None:
        print("⚠️  No run.toml found; copy config.example.toml to run.toml to create one")
        return []
    from local_learning.config import load_run_config
    from local_learning.components.blocks.tools import describe_model

    try:
        config = load_run_config(path)
    except Exception as e:
        print(f"❌ {path}: {e}")
        return [f"Invalid run configuration {path}"]
    print(f"✅ {path}: mode={config.mode}, model={config.model}, dataset={config.dataset}")
    described = describe_model(config.model, config.classes)
    if described["status"] != "success":
        print(f"❌ {config.model}: {described['error_message']}")
        return [f"Model file {config.model} does not build"]
    print(f"✅ {config.model}: K={described['K']}, block sizes {described['block_sizes']}, {sum(described['block_params'])} backbone parameters")
    return []


def check_gradients():
    """Tape gradients against central differences on random instances of every op."""
    print("\n🔍 Checking gradients...")
    print("-" * 50)
    from local_learning.components.tensor.tools import check_gradients as run_check

    result = run_check(seed=0, instances=3)
    if result["status"] != "success":
        print(f"❌ {result['error_message']}")
        return ["Gradient check raised an error"]
    for op, error in sorted(result["max_relative_error"].items()):
        mark = "✅" if error < 1e-4 else "❌"
        print(f"{mark} {op}: max relative error {error:.2e}")
    return [] if result["passed"] else ["Gradient check exceeded tolerance"]


def check_pipeline():
    """A three-worker pipeline epoch must match the single-thread schedule exactly."""
    print("\n🔗 Checking pipeline against the single-thread schedule...")
    print("-" * 50)
    import numpy as np

    from local_learning.components.blocks.model_file import mlp_description
    from local_learning.components.blocks.network import build_network
    from local_learning.components.data.blobs import gen_blobs
    from local_learning.components.pipeline.schedule import delayed_update_oracle
    from local_learning.components.pipeline.workers import run_pipeline
    from local_learning.config import DatasetSpec, PipelineConfig, TrainConfig
    from local_learning.seeding import RandomStreams

    streams = RandomStreams(0)
    train = TrainConfig(eta_l=0.05, epochs=1, batch_size=16)
    data = gen_blobs(DatasetSpec(n=80, classes=2, dim=2), streams.generator("data")).train
    description = mlp_description([2, 8, 8, 2], K=3)

    def fresh():
        layers = description.build_layers(streams.generator("model-init"))
        return build_network(layers, description.K, 2, train, streams, data.input_shape)

    try:
        oracle = delayed_update_oracle(fresh(), data, train, streams)
        piped = run_pipeline(fresh(), data, train, PipelineConfig(workers=3), streams, timing=False)
    except Exception as e:
        print(f"❌ {type(e).__name__}: {e}")
        return ["Pipeline run failed"]
    expected, actual = oracle.trajectory[-1], piped.trajectory[-1]
    mismatched = [name for name in expected if not np.array_equal(expected[name], actual[name])]
    if mismatched:
        print(f"❌ {len(mismatched)} parameter arrays differ, first: {mismatched[0]}")
        return ["Pipeline diverges from the single-thread schedule"]
    print(f"✅ {len(expected)} parameter arrays identical after one epoch")
    return []


def main():
    """Main check function."""
    print("🧱 Local Learning Engine - Environment Check")
    print("=" * 50)

    issues = check_packages()
    if issues:
        print("\n❌ Install the missing packages first: pip install -r requirements.txt")
        for issue in issues:
            print(f"  • {issue}")
        sys.exit(1)

    issues += check_cores()
    issues += check_config(sys.argv[1] if len(sys.argv) > 1 else None)
    issues += check_gradients()
    issues += check_pipeline()

    print("\n" + "=" * 50)
    if issues:
        print("❌ Issues found:")
        for issue in issues:
            print(f"  • {issue}")
        sys.exit(1)
    print("✅ All checks passed")


if __name__ == "__main__":
    main()
