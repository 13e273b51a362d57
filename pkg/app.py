#!/usr/bin/env python3
"""
Local Learning Engine - Dashboard

A small web front end over the engine: evaluate the cost formulas, launch a
short training run from a model file, and browse the CSV files earlier runs
wrote into their output directories.
"""

import os
import tempfile
from typing import Any, Dict, List

import pandas as pd
import streamlit as st

from local_learning import engine
from local_learning.components.blocks.tools import describe_model, preview_partition
from local_learning.components.cost.tools import calculate_costs
from local_learning.components.pipeline.tools import schedule_table
from local_learning.components.trainer.tools import learning_rate_schedule, read_metrics
from local_learning.config import load_run_config
from local_learning.settings import configure_logging

configure_logging()

MODELS_DIR = os.path.join(os.path.dirname(__file__), "models")
RUNS_DIR = os.path.join(os.path.dirname(__file__), "runs")

# Page configuration
st.set_page_config(
    page_title="Local Learning Engine",
    page_icon="🧱",
    layout="wide",
    initial_sidebar_state="expanded",
)

st.markdown("""
<style>
    .main-header {
        font-size: 2rem;
        font-weight: 700;
        margin-bottom: 1rem;
    }
    .modern-card {
        background: rgba(255, 255, 255, 0.95);
        border-radius: 12px;
        padding: 1rem 1.25rem;
        margin-bottom: 1rem;
        box-shadow: 0 2px 8px rgba(0, 0, 0, 0.08);
    }
</style>
""", unsafe_allow_html=True)


def initialize_session_state():
    """Initialize session state variables."""
    defaults = {
        'current_page': 'home',
        'last_result': None,
        'last_output_dir': None,
        'cost_result': None,
    }

    for key, value in defaults.items():
        if key not in st.session_state:
            st.session_state[key] = value


def list_model_files() -> List[str]:
    if not os.path.isdir(MODELS_DIR):
        return []
    return sorted(os.path.join(MODELS_DIR, name) for name in os.listdir(MODELS_DIR) if name.endswith(".txt"))


def list_run_dirs() -> List[str]:
    if not os.path.isdir(RUNS_DIR):
        return []
    return sorted(
        os.path.join(RUNS_DIR, name) for name in os.listdir(RUNS_DIR)
        if os.path.isdir(os.path.join(RUNS_DIR, name))
    )


def show_error(result: Dict[str, Any]):
    st.error(f"{result.get('error_type', 'Error')}: {result.get('error_message')}")


def show_navigation():
    """Sidebar navigation."""
    with st.sidebar:
        st.markdown("## 🧱 Local Learning")
        st.caption("Coupled local blocks, pipelined")

        pages = {
            "🏠 Home": "home",
            "📐 Cost Calculator": "cost",
            "🚀 Train": "train",
            "📊 Results": "results",
        }

        current_page = st.session_state.get('current_page', 'home')
        for page_name, page_key in pages.items():
            if st.button(page_name, use_container_width=True, key=f"nav_{page_key}",
                         type="primary" if current_page == page_key else "secondary"):
                st.session_state.current_page = page_key
                st.rerun()

        if st.session_state.last_output_dir:
            st.markdown("---")
            st.caption(f"Last run: {st.session_state.last_output_dir}")


def show_partition_panel(models: List[str]):
    """Blocks and heads of a bundled model file, and its layers split into a chosen block count."""
    path = st.selectbox("Model file", models, format_func=os.path.basename, key="home_model")
    classes = st.number_input("Classes", min_value=2, value=10, key="home_classes")
    described = describe_model(path, int(classes))
    if described["status"] != "success":
        show_error(described)
        return
    st.caption(f"{described['layers']} layers in {described['K']} blocks, "
               f"parameters per block {described['block_params']}")
    K = st.number_input("Try block count", min_value=1, max_value=described["layers"],
                        value=described["K"], key="home_partition_K")
    preview = preview_partition(path, int(K))
    if preview["status"] != "success":
        show_error(preview)
        return
    st.dataframe(pd.DataFrame({"block": range(preview["K"]),
                               "layers": [", ".join(block) for block in preview["blocks"]]}),
                 use_container_width=True)
    if not preview["heads_buildable"]:
        st.warning("Some block after the first starts with a layer a head cannot mirror.")


def show_home_page():
    st.markdown('<h1 class="main-header">Local Learning Engine</h1>', unsafe_allow_html=True)
    st.markdown("""
    <div class="modern-card">
        Each block of the network trains against its own auxiliary head. A head mirrors the first
        layer of the next block and follows it through an exponential moving average, adds a
        learnable bias, and scales that bias with a learnable scalar. Blocks never exchange gradients,
        so they can run as a pipeline of workers that only pass activations forward.
    </div>
    """, unsafe_allow_html=True)

    col1, col2 = st.columns(2)
    with col1:
        st.markdown("##### Model files")
        models = list_model_files()
        if models:
            show_partition_panel(models)
        else:
            st.info("No model files found in models/.")
    with col2:
        st.markdown("##### Pipeline schedule")
        K = st.number_input("Workers", min_value=1, max_value=8, value=3, key="home_K")
        batches = st.number_input("Batches", min_value=1, max_value=16, value=4, key="home_batches")
        result = schedule_table(int(K), int(batches))
        if result["status"] == "success":
            st.dataframe(pd.DataFrame(result["rows"]), use_container_width=True)
            st.caption(f"{result['ticks']} ticks, ideal busy fraction {result['ideal_busy_frac']:.2f}")
        else:
            show_error(result)


def show_cost_page():
    st.markdown('<h1 class="main-header">Cost Calculator</h1>', unsafe_allow_html=True)

    with st.form("cost_form"):
        col1, col2, col3 = st.columns(3)
        with col1:
            L = st.number_input("Layers L", min_value=1, value=101)
            K = st.number_input("Blocks K", min_value=1, value=11)
            eps = st.number_input("FLOPs budget", min_value=0.0, value=0.1, format="%.3f")
        with col2:
            p_min = st.number_input("Smallest layer params", min_value=1.0, value=1000.0)
            p_max = st.number_input("Largest layer params", min_value=1.0, value=100000.0)
            beta = st.number_input("Bias ratio", min_value=0.0, value=0.01, format="%.4f")
        with col3:
            beta_f = st.number_input("Head FLOPs ratio", min_value=0.0, value=0.02, format="%.4f")
            beta_a = st.number_input("Head activation ratio", min_value=0.0, value=0.02, format="%.4f")
            rho_mem = st.number_input("Memory target", min_value=0.0, max_value=1.0, value=0.25, format="%.3f")
        submitted = st.form_submit_button("Calculate", type="primary")

    if submitted:
        st.session_state.cost_result = calculate_costs(
            L=int(L), K=int(K), p_min=p_min, p_max=p_max, beta=beta,
            beta_f=beta_f, beta_a=beta_a, eps=eps, rho_mem=rho_mem,
        )

    result = st.session_state.cost_result
    if result is None:
        return
    if result["status"] != "success":
        show_error(result)
        return
    st.code(result["table"], language=None)
    for note in result["report"].get("notes", []):
        st.warning(note)


def show_train_page():
    st.markdown('<h1 class="main-header">Train</h1>', unsafe_allow_html=True)

    models = list_model_files()
    if not models:
        st.warning("Add a model description file to models/ first.")
        return

    with st.form("train_form"):
        col1, col2 = st.columns(2)
        with col1:
            model = st.selectbox("Model", models, format_func=os.path.basename)
            mode = st.selectbox("Mode", ["sequential", "pipeline", "e2e"])
            epochs = st.number_input("Epochs", min_value=1, max_value=50, value=3)
            eta_l = st.number_input("Learning rate", min_value=1e-5, value=0.05, format="%.4f")
            seed = st.number_input("Seed", min_value=0, value=0)
        with col2:
            dataset = st.selectbox("Dataset", ["synthetic", "csv"])
            classes = st.number_input("Classes (synthetic)", min_value=2, value=2)
            dim = st.number_input("Dimensions (synthetic)", min_value=1, value=2)
            n = st.number_input("Records (synthetic)", min_value=10, value=1000)
            uploaded = st.file_uploader("Training CSV (label,f0,f1,...)", type=["csv"])
            uploaded_test = st.file_uploader("Test CSV", type=["csv"])
        use_ema = st.checkbox("EMA coupling", value=True)
        use_lb = st.checkbox("Learnable bias", value=True)
        use_scalable = st.checkbox("Learnable scale", value=True)
        submitted = st.form_submit_button("Run", type="primary")

    if submitted:
        overrides = {
            "model": model, "mode": mode, "epochs": int(epochs), "eta_l": eta_l, "seed": int(seed),
            "dataset": dataset, "classes": int(classes), "dim": int(dim), "n": int(n),
            "use_ema": use_ema, "use_lb": use_lb, "use_scalable": use_scalable,
            "output_dir": os.path.join(RUNS_DIR, f"{os.path.splitext(os.path.basename(model))[0]}-{mode}-{int(seed)}"),
        }
        if dataset == "csv":
            if uploaded is None or uploaded_test is None:
                st.error("Upload a training and a test CSV to train on CSV data.")
                return
            for key, upload in (("train_csv", uploaded), ("test_csv", uploaded_test)):
                handle = tempfile.NamedTemporaryFile(delete=False, suffix=".csv")
                handle.write(upload.getvalue())
                handle.close()
                overrides[key] = handle.name
        try:
            config = load_run_config(None, overrides)
        except Exception as e:
            st.error(f"Invalid configuration: {e}")
            return
        with st.spinner("Training..."):
            result = engine.run_training(config)
        st.session_state.last_result = result
        if result["status"] == "success":
            st.session_state.last_output_dir = config.output_dir

    result = st.session_state.last_result
    if result is None:
        schedule = learning_rate_schedule(0.05, 10)
        if schedule["status"] == "success":
            st.caption("Cosine schedule over 10 epochs")
            st.line_chart(pd.DataFrame({"lr": schedule["rates"]}))
        return
    if result["status"] != "success":
        show_error(result)
        return
    st.success(f"Finished: test accuracy {result['test_acc']}")
    show_metrics(result["metrics_path"])


def show_metrics(path: str):
    metrics = read_metrics(path)
    if metrics["status"] != "success":
        show_error(metrics)
        return
    frame = metrics["frame"]
    col1, col2 = st.columns(2)
    with col1:
        st.markdown("##### Loss per block")
        st.line_chart(frame.pivot(index="epoch", columns="block", values="loss"))
    with col2:
        st.markdown("##### Accuracy per block")
        st.line_chart(frame.pivot(index="epoch", columns="block", values="acc"))
    st.dataframe(frame, use_container_width=True)


def show_results_page():
    st.markdown('<h1 class="main-header">Results</h1>', unsafe_allow_html=True)

    runs = list_run_dirs()
    if not runs:
        st.info("No runs yet. Start one from the Train page or with python -m local_learning.")
        return
    run_dir = st.selectbox("Run directory", runs, format_func=os.path.basename)
    files = sorted(name for name in os.listdir(run_dir) if name.endswith((".csv", ".json")))
    if not files:
        st.warning("This directory holds no result files.")
        return

    for name in files:
        path = os.path.join(run_dir, name)
        with st.expander(name, expanded=name == "metrics.csv"):
            if name == "metrics.csv":
                show_metrics(path)
            elif name.endswith(".csv"):
                st.dataframe(pd.read_csv(path), use_container_width=True)
            else:
                with open(path, "r", encoding="utf-8") as handle:
                    st.code(handle.read(), language="json")


def main_app():
    """Main application interface."""
    show_navigation()

    current_page = st.session_state.get('current_page', 'home')

    if current_page == 'home':
        show_home_page()
    elif current_page == 'cost':
        show_cost_page()
    elif current_page == 'train':
        show_train_page()
    elif current_page == 'results':
        show_results_page()
    else:
        st.session_state.current_page = 'home'
        st.rerun()


def main():
    """Main application entry point."""
    initialize_session_state()
    main_app()


if __name__ == "__main__":
    main()
