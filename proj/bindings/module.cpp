#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "amrl/checkpoint.hpp"
#include "amrl/env.hpp"
#include "amrl/experiment.hpp"
#include "amrl/serialize.hpp"
#include "amrl/stats.hpp"
#include "amrl/trainer.hpp"

namespace py = pybind11;
using namespace amrl;

namespace {

py::array_t<double> to_numpy(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> arr(shape);
    std::copy(t.data(), t.data() + t.numel(), arr.mutable_data());
    return arr;
}

Tensor from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    std::vector<int> shape;
    for (py::ssize_t i = 0; i < arr.ndim(); ++i) shape.push_back(static_cast<int>(arr.shape(i)));
    std::vector<double> data(arr.data(), arr.data() + arr.size());
    return Tensor(shape, std::move(data));
}

nlohmann::json json_from_py(const py::object& obj) {
    if (obj.is_none()) return nlohmann::json::object();
    const std::string dumped = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
    return nlohmann::json::parse(dumped);
}

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(py::str(j.dump()));
}

// Stateful wrapper pairing an environment with its own seeded rng.
class PyEnv {
public:
    PyEnv(const std::string& domain, const py::object& config, std::uint64_t seed)
        : env_(env::make_environment(domain, json_from_py(config))), rng_(seed) {
        env_->reset(rng_);
    }

    void reset() { env_->reset(rng_); }
    py::tuple step(int a0, int a1) {
        const env::StepResult r = env_->step(a0, a1);
        return py::make_tuple(r.reward_learner, r.reward_other, r.done);
    }
    py::array_t<double> observe(int agent) const { return to_numpy(env_->observe(agent)); }
    int scripted_action() { return env_->scripted_action(rng_); }
    bool done() const { return env_->done(); }
    bool won() const { return env_->won(); }
    long step_count() const { return env_->step_count(); }
    int num_actions() const { return env_->num_actions(); }
    std::vector<int> observation_shape() const {
        const auto s = env_->observation_shape();
        return {s[0], s[1], s[2]};
    }

private:
    std::unique_ptr<env::Environment> env_;
    Rng rng_;
};

// A built network with plain forward access.
class PyNetwork {
public:
    PyNetwork(const std::string& arch, const std::string& domain, std::uint64_t seed)
        : cfg_(net::ArchitectureConfig::for_domain(net::arch_from_string(arch), domain)) {
        Rng rng(derive_seed(seed, 0));
        params_ = net::build(cfg_, rng);
    }

    explicit PyNetwork(const std::string& checkpoint_path) {
        const Checkpoint ck = load_checkpoint(checkpoint_path);
        if (!ck.meta.contains("train_config")) throw config_error("checkpoint lacks train_config metadata");
        const train::TrainConfig tc = train::TrainConfig::from_json(ck.meta["train_config"]);
        cfg_ = tc.arch;
        params_ = ck.params;
    }

    py::dict forward(const py::array_t<double, py::array::c_style | py::array::forcecast>& obs) const {
        const net::ForwardOutput out = net::forward_plain(cfg_, params_, from_numpy(obs));
        py::dict d;
        d["policy"] = to_numpy(out.policy);
        d["value"] = out.value;
        d["last_hidden"] = to_numpy(out.last_hidden);
        py::list opp;
        for (const auto& p : out.opponent_policies) opp.append(to_numpy(p));
        d["opponent_policies"] = opp;
        return d;
    }

    std::size_t parameter_count() const { return params_.total_elements(); }
    py::dict parameters() const {
        py::dict d;
        for (std::size_t i = 0; i < params_.size(); ++i)
            d[py::str(params_.name(i))] = to_numpy(params_.value(i));
        return d;
    }

private:
    net::ArchitectureConfig cfg_;
    NetworkParams params_;
};

}  // namespace

PYBIND11_MODULE(amrl, m) {
    m.doc() = "asynchronous actor-critic with agent-modeling auxiliary tasks";

    py::register_exception<config_error>(m, "ConfigError");
    py::register_exception<contract_error>(m, "ContractError");

    py::class_<PyEnv>(m, "Env")
        .def(py::init<const std::string&, const py::object&, std::uint64_t>(), py::arg("domain"),
             py::arg("config") = py::none(), py::arg("seed") = 1)
        .def("reset", &PyEnv::reset)
        .def("step", &PyEnv::step, py::arg("learner_action"), py::arg("other_action"))
        .def("observe", &PyEnv::observe, py::arg("agent") = 0)
        .def("scripted_action", &PyEnv::scripted_action)
        .def("done", &PyEnv::done)
        .def("won", &PyEnv::won)
        .def("step_count", &PyEnv::step_count)
        .def("num_actions", &PyEnv::num_actions)
        .def("observation_shape", &PyEnv::observation_shape);

    py::class_<PyNetwork>(m, "Network")
        .def(py::init<const std::string&, const std::string&, std::uint64_t>(), py::arg("arch"), py::arg("domain"),
             py::arg("seed") = 1)
        .def(py::init<const std::string&>(), py::arg("checkpoint"))
        .def("forward", &PyNetwork::forward, py::arg("observation"))
        .def("parameter_count", &PyNetwork::parameter_count)
        .def("parameters", &PyNetwork::parameters);

    m.def("softmax", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        return to_numpy(kernels::softmax_forward(from_numpy(x)));
    });
    m.def("elu", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        return to_numpy(kernels::elu_forward(from_numpy(x)));
    });
    m.def(
        "conv2d",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return to_numpy(kernels::conv2d_forward(from_numpy(x), from_numpy(w), from_numpy(b)));
        },
        py::arg("input"), py::arg("weight"), py::arg("bias"));

    m.def(
        "nstep_returns",
        [](const std::vector<double>& rewards, const std::vector<double>& values, double bootstrap, double gamma) {
            const rl::ReturnsAdvantages ra = rl::nstep_returns_and_advantages(rewards, values, bootstrap, gamma);
            return py::make_tuple(ra.returns, ra.advantages);
        },
        py::arg("rewards"), py::arg("values"), py::arg("bootstrap"), py::arg("gamma") = 0.99);

    m.def(
        "schedule_value",
        [](const py::object& schedule, long update_index) {
            return schedule_from_json(json_from_py(schedule)).value_at(update_index);
        },
        py::arg("schedule"), py::arg("update_index"));

    m.def("moving_average", &xp::moving_average, py::arg("series"), py::arg("window"));

    m.def(
        "welch_ttest",
        [](const std::vector<double>& a, const std::vector<double>& b, double alpha) {
            const xp::WelchResult r = xp::welch_ttest(a, b, alpha);
            py::dict d;
            d["t"] = r.t;
            d["df"] = r.df;
            d["p_value"] = r.p_value;
            d["significant"] = r.significant;
            return d;
        },
        py::arg("a"), py::arg("b"), py::arg("alpha") = 0.05);

    m.def(
        "train",
        [](const py::object& config) {
            const xp::ExperimentConfig cfg = xp::ExperimentConfig::from_json(json_from_py(config));
            const xp::ExperimentSummary s = xp::run_experiment(cfg);
            py::dict d;
            d["mean_final_return"] = s.mean_final_return;
            d["std_final_return"] = s.std_final_return;
            py::list finals;
            for (const auto& r : s.runs) finals.append(r.final_smoothed_return);
            d["per_run_final_return"] = finals;
            return d;
        },
        py::arg("config"));

    m.def(
        "evaluate",
        [](const std::string& checkpoint, long episodes, std::uint64_t seed) {
            const Checkpoint ck = load_checkpoint(checkpoint);
            if (!ck.meta.contains("train_config")) throw config_error("checkpoint lacks train_config metadata");
            const train::TrainConfig tc = train::TrainConfig::from_json(ck.meta["train_config"]);
            const train::EvalStats s =
                train::evaluate(ck.params, tc.arch, tc.domain, tc.env, episodes, seed, tc.weights.gamma);
            py::dict d;
            d["mean_return"] = s.mean_return;
            d["std_return"] = s.std_return;
            d["win_rate"] = s.win_rate;
            d["mean_length"] = s.mean_length;
            d["aux_accuracy"] = s.aux_accuracy;
            return d;
        },
        py::arg("checkpoint"), py::arg("episodes") = 100, py::arg("seed") = 1);
}
