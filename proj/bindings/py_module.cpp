// Python bindings for the hook-block MIL core. Thin by design: numpy arrays
// in, numpy arrays out, all numerics stay in the C++ library.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "hookmil/bag_io.hpp"
#include "hookmil/hook_block.hpp"
#include "hookmil/matrix.hpp"
#include "hookmil/metrics.hpp"
#include "hookmil/model.hpp"
#include "hookmil/rng.hpp"
#include "hookmil/synth.hpp"
#include "hookmil/theory.hpp"

namespace py = pybind11;
using namespace hookmil;

namespace {

using DoubleArray =
    py::array_t<double, py::array::c_style | py::array::forcecast>;

// Accepts 1-D (treated as a single row) or 2-D input.
Matrix to_matrix(const DoubleArray& arr) {
    py::buffer_info info = arr.request();
    std::size_t rows, cols;
    if (info.ndim == 1) {
        rows = 1;
        cols = static_cast<std::size_t>(info.shape[0]);
    } else if (info.ndim == 2) {
        rows = static_cast<std::size_t>(info.shape[0]);
        cols = static_cast<std::size_t>(info.shape[1]);
    } else {
        throw DimensionError("expected a 1-D or 2-D array, got " +
                             std::to_string(info.ndim) + "-D");
    }
    Matrix m(rows, cols);
    std::memcpy(m.data(), info.ptr, sizeof(double) * m.size());
    return m;
}

py::array_t<double> to_array(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::memcpy(out.mutable_data(), m.data(), sizeof(double) * m.size());
    return out;
}

py::array_t<double> to_vector(const Matrix& m) {
    py::array_t<double> out(m.size());
    std::memcpy(out.mutable_data(), m.data(), sizeof(double) * m.size());
    return out;
}

// ==== model wrapper ==========================================================

class PyModel {
public:
    PyModel(std::size_t dim, std::size_t hooks, std::size_t heads,
            std::size_t attn_dim, std::size_t classes, const std::string& kind,
            std::uint64_t seed, double token_std) {
        ModelShape shape;
        shape.dim = dim;
        shape.hooks = hooks;
        shape.heads = heads;
        shape.attn_dim = attn_dim;
        shape.classes = classes;
        shape.kind = parse_model_kind(kind);
        Rng rng = Rng::derive(seed, 0);
        params_ =
            init_model(shape, HookInitStrategy::trunc_normal(token_std), rng);
    }

    // Label-free forward: class probabilities, pooling attention, and the
    // hook-block attention maps when the model has hooks.
    py::dict predict(const DoubleArray& features) const {
        Matrix x = to_matrix(features);
        ModelInspection ins = model_inspect(params_, x);
        py::dict out;
        out["probs"] = to_vector(ins.pred.probs);
        out["attention"] = to_vector(ins.pred.attention);
        out["embedding"] = to_vector(ins.pred.z);
        if (!ins.hook_rounds.empty()) {
            const HookForwardRecord& rec = ins.hook_rounds.back();
            out["hook_to_instance"] = to_array(rec.a_h2x);
            out["instance_to_hook"] = to_array(rec.a_x2h);
            out["dependency"] = to_array(induced_dependency(rec.a_x2h,
                                                            rec.a_h2x));
            out["diversity"] = ins.div;
        }
        return out;
    }

    py::dict loss(const DoubleArray& features, int label,
                  double lambda) const {
        ForwardResult r = model_forward(params_, to_matrix(features), label,
                                        lambda);
        py::dict out;
        out["total"] = r.total;
        out["cross_entropy"] = r.ce;
        out["diversity"] = r.div;
        out["hook_similarity"] = r.hook_sim;
        out["probs"] = to_vector(r.pred.probs);
        return out;
    }

    std::vector<std::string> param_names() const {
        std::vector<std::string> names;
        for_each_param(params_, [&](const std::string& name, const Matrix&) {
            names.push_back(name);
        });
        return names;
    }

    py::array_t<double> param(const std::string& name) const {
        py::object result = py::none();
        for_each_param(params_, [&](const std::string& n, const Matrix& m) {
            if (n == name) result = to_array(m);
        });
        if (result.is_none())
            throw ConfigError("unknown parameter '" + name + "'");
        return result.cast<py::array_t<double>>();
    }

    std::string kind() const { return to_string(params_.kind); }

private:
    ModelParams params_;
};

// ==== dataset generation =====================================================

std::vector<std::string> py_generate_dataset(
    const std::string& out_dir, const std::string& task, std::uint64_t seed,
    std::size_t dim, std::size_t n_min, std::size_t n_max, double separation,
    int bags_train, int bags_val, int bags_test) {
    SynthTaskConfig cfg;
    cfg.task = parse_synth_task(task);
    cfg.n_clusters = cfg.task == SynthTask::Witness ? 1 : 2;
    cfg.seed = seed;
    cfg.dim = dim;
    cfg.n_min = n_min;
    cfg.n_max = n_max;
    cfg.separation = separation;
    cfg.bags.train = bags_train;
    cfg.bags.val = bags_val;
    cfg.bags.test = bags_test;
    cfg.validate();
    return write_dataset(generate_dataset(cfg), out_dir);
}

}  // namespace

PYBIND11_MODULE(_hookmil, m) {
    m.doc() = "hook-token MIL core: forward passes, structural checks, bag IO";

    py::class_<PyModel>(m, "Model")
        .def(py::init<std::size_t, std::size_t, std::size_t, std::size_t,
                      std::size_t, const std::string&, std::uint64_t,
                      double>(),
             py::arg("dim"), py::arg("hooks") = 8, py::arg("heads") = 4,
             py::arg("attn_dim") = 128, py::arg("classes") = 2,
             py::arg("kind") = "hookmil", py::arg("seed") = 1,
             py::arg("token_std") = 0.02)
        .def("predict", &PyModel::predict, py::arg("features"),
             "Class probabilities, pooling attention, and hook attention "
             "maps for one bag (rows are instances).")
        .def("loss", &PyModel::loss, py::arg("features"), py::arg("label"),
             py::arg("lam") = 0.2)
        .def("param_names", &PyModel::param_names)
        .def("param", &PyModel::param, py::arg("name"),
             "Copy of one named parameter matrix.")
        .def_property_readonly("kind", &PyModel::kind);

    m.def(
        "diversity_loss",
        [](const DoubleArray& logits, double eps) {
            return diversity_loss(to_matrix(logits), eps);
        },
        py::arg("logits"), py::arg("eps") = kDiversityEps,
        "Mean squared off-diagonal cosine similarity between rows.");

    m.def(
        "mean_offdiag_similarity",
        [](const DoubleArray& logits) {
            return mean_offdiag_similarity(to_matrix(logits));
        },
        py::arg("logits"));

    m.def(
        "induced_dependency",
        [](const DoubleArray& a_x2h, const DoubleArray& a_h2x) {
            return to_array(
                induced_dependency(to_matrix(a_x2h), to_matrix(a_h2x)));
        },
        py::arg("instance_to_hook"), py::arg("hook_to_instance"),
        "Instance-to-instance dependency map routed through the hooks.");

    m.def(
        "numerical_rank",
        [](const DoubleArray& a, double tau) {
            return numerical_rank(to_matrix(a), tau).numerical_rank;
        },
        py::arg("matrix"), py::arg("tau") = 1e-8,
        "Count of singular values above tau * sigma_max.");

    m.def(
        "softmax_jacobian_norm",
        [](const DoubleArray& p) {
            return softmax_jacobian_norm(to_matrix(p));
        },
        py::arg("probs"),
        "Spectral norm of the softmax Jacobian at a probability vector.");

    m.def("analytic_flop_ratio", &analytic_flop_ratio, py::arg("n"),
          py::arg("hooks"));

    m.def(
        "read_bag",
        [](const std::string& path) {
            return to_array(read_bag(path).features);
        },
        py::arg("path"));

    m.def(
        "write_bag",
        [](const std::string& path, const DoubleArray& features) {
            write_bag(path, to_matrix(features));
        },
        py::arg("path"), py::arg("features"),
        "Float32 row-major bag file; values are quantized on write.");

    m.def("generate_dataset", &py_generate_dataset, py::arg("out_dir"),
          py::arg("task") = "cooccurrence", py::arg("seed") = 1,
          py::arg("dim") = 32, py::arg("n_min") = 64, py::arg("n_max") = 256,
          py::arg("separation") = 4.0, py::arg("bags_train") = 200,
          py::arg("bags_val") = 50, py::arg("bags_test") = 100,
          "Write a synthetic task to out_dir; returns the manifest paths.");
}
