#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "tcr/gradcheck.hpp"
#include "tcr/mlp.hpp"
#include "tcr/optim.hpp"
#include "tcr/rng.hpp"
#include "tcr/tape.hpp"

using namespace tcr;

namespace {

// Straight-line re-implementation of the MLP forward pass with the same
// accumulation order as Tape::matmul: inner products run over the input
// index in increasing order. Used as a duplicate-arithmetic oracle.
std::vector<double> mlp_forward_oracle(const MlpParams& p, const std::vector<double>& x) {
    std::vector<double> h = x;
    for (std::size_t layer = 0; layer < p.weights.size(); ++layer) {
        std::size_t in = p.layer_sizes[layer], out = p.layer_sizes[layer + 1];
        std::vector<double> next(out);
        for (std::size_t j = 0; j < out; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < in; ++k) acc += h[k] * p.weights[layer].data[k * out + j];
            next[j] = acc + p.biases[layer].data[j];
        }
        bool last = layer + 1 == p.weights.size();
        Activation act = last ? p.output : p.hidden;
        for (double& v : next) {
            if (act == Activation::relu) v = v > 0.0 ? v : 0.0;
            if (act == Activation::sigmoid) {
                double y = 1.0 / (1.0 + std::exp(-v));
                if (y < Tape::kSigmoidFloor) y = Tape::kSigmoidFloor;
                if (y > 1.0 - Tape::kSigmoidFloor) y = 1.0 - Tape::kSigmoidFloor;
                v = y;
            }
        }
        h = std::move(next);
    }
    return h;
}

Tensor random_tensor(std::vector<std::size_t> shape, const CounterRng& rng, std::uint64_t base,
                     double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t.data[i] = rng.uniform(base + i, lo, hi);
    return t;
}

} // namespace

TEST_CASE("mlp_forward: zero weights and biases give sigmoid(0)=0.5") {
    MlpParams p = MlpParams::create({3, 5, 2}, Activation::relu, Activation::sigmoid,
                                    CounterRng(1));
    for (Tensor& w : p.weights)
        for (double& v : w.data) v = 0.0;
    Tensor x({4, 3});
    for (std::size_t i = 0; i < x.numel(); ++i) x.data[i] = 0.3 * double(i) - 1.0;
    Tensor y = mlp_forward(p, x);
    REQUIRE(y.shape == std::vector<std::size_t>({4, 2}));
    for (double v : y.data) CHECK(v == 0.5);
}

TEST_CASE("mlp_forward: single layer saturates to ~1 with large positive bias") {
    MlpParams p = MlpParams::create({1, 1}, Activation::relu, Activation::sigmoid, CounterRng(1));
    p.weights[0].data[0] = 0.0;
    p.biases[0].data[0] = 50.0;
    Tensor y = mlp_forward(p, Tensor({1, 1}, {0.7}));
    CHECK(y.data[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y.data[0] < 1.0); // sigmoid output stays strictly inside (0,1)
}

TEST_CASE("mlp_forward: matches straight-line oracle bitwise on a seeded [4,8,1] net") {
    CounterRng rng(42);
    MlpParams p = MlpParams::create({4, 8, 1}, Activation::relu, Activation::sigmoid, rng);
    std::vector<double> x = {0.25, -0.5, 0.75, -0.125};
    Tensor y = mlp_forward(p, Tensor({1, 4}, x));
    std::vector<double> ref = mlp_forward_oracle(p, x);
    REQUIRE(ref.size() == 1);
    CHECK(y.data[0] == ref[0]); // bitwise
}

TEST_CASE("mlp_forward: input width mismatch rejected") {
    MlpParams p = MlpParams::create({4, 8, 1}, Activation::relu, Activation::sigmoid,
                                    CounterRng(3));
    Tensor bad({2, 3});
    CHECK_THROWS_AS((void)mlp_forward(p, bad), ShapeError);
}

TEST_CASE("mlp param_count matches sum of layer parameter counts") {
    MlpParams p = MlpParams::create({7, 13, 5, 2}, Activation::relu, Activation::sigmoid,
                                    CounterRng(5));
    CHECK(p.param_count() == 7 * 13 + 13 + 13 * 5 + 5 + 5 * 2 + 2);
}

TEST_CASE("backward: quadratic loss gives exactly 2w") {
    Tape tape;
    Tensor w0 = random_tensor({6}, CounterRng(7), 100);
    Var w = tape.param(w0);
    Var loss = tape.sum(tape.square(w));
    tape.backward(loss);
    const Tensor& g = tape.grad(w);
    for (std::size_t i = 0; i < 6; ++i) CHECK(g.data[i] == 2.0 * w0.data[i]);
}

TEST_CASE("backward: constant loss gives exactly zero gradients") {
    Tape tape;
    Var w = tape.param(random_tensor({4}, CounterRng(8), 0));
    Var c = tape.constant(Tensor::scalar(3.5));
    Var loss = tape.sum(tape.square(c));
    (void)w;
    tape.backward(loss);
    for (double v : tape.grad(w).data) CHECK(v == 0.0);
}

TEST_CASE("backward: rejects non-scalar loss") {
    Tape tape;
    Var w = tape.param(Tensor({2}, {1.0, 2.0}));
    Var y = tape.square(w);
    CHECK_THROWS_AS(tape.backward(y), ShapeError);
}

TEST_CASE("backward: random MLP + MSE matches finite differences") {
    CounterRng rng(11);
    MlpParams p = MlpParams::create({3, 6, 4, 1}, Activation::relu, Activation::sigmoid, rng);
    Tensor x = random_tensor({5, 3}, rng.stream(1), 0);
    Tensor target = random_tensor({5, 1}, rng.stream(2), 0, 0.0, 1.0);

    TapeLossFn loss_fn = [&](Tape& t, const std::vector<Var>& vars) {
        MlpVars mv;
        for (std::size_t i = 0; i < p.weights.size(); ++i) {
            mv.weights.push_back(vars[2 * i]);
            mv.biases.push_back(vars[2 * i + 1]);
        }
        Var y = mlp_forward(t, p, mv, t.constant(x));
        return t.mean(t.square(t.sub(y, t.constant(target))));
    };
    GradCheckResult res = finite_diff_check(p.collect(), loss_fn);
    CHECK(res.max_rel_error < 1e-4);
    CHECK(res.coords_checked == p.param_count());
}

TEST_CASE("elementwise and structural ops pass finite-difference checks") {
    CounterRng rng(13);
    auto check_unary = [&](const char* name, auto op, double lo, double hi) {
        INFO(name);
        Tensor w = random_tensor({7}, rng.stream(std::hash<std::string>{}(name)), 0, lo, hi);
        TapeLossFn fn = [&](Tape& t, const std::vector<Var>& v) {
            return t.mean(op(t, v[0]));
        };
        CHECK(finite_diff_check({w}, fn).max_rel_error < 1e-4);
    };
    check_unary("relu", [](Tape& t, Var x) { return t.relu(x); }, 0.2, 1.0);
    check_unary("sigmoid", [](Tape& t, Var x) { return t.sigmoid(x); }, -2.0, 2.0);
    check_unary("log", [](Tape& t, Var x) { return t.log(x); }, 0.2, 2.0);
    check_unary("abs", [](Tape& t, Var x) { return t.abs(x); }, 0.2, 1.5);
    check_unary("square", [](Tape& t, Var x) { return t.square(x); }, -1.0, 1.0);
    check_unary("scale", [](Tape& t, Var x) { return t.scale(x, -2.5); }, -1.0, 1.0);
    check_unary("add_scalar", [](Tape& t, Var x) { return t.add_scalar(x, 0.7); }, -1.0, 1.0);
    check_unary("clamp", [](Tape& t, Var x) { return t.clamp(x, -0.5, 0.5); }, -0.4, 0.4);

    SUBCASE("binary, matmul, gather, concat") {
        Tensor a = random_tensor({3, 4}, rng.stream(100), 0);
        Tensor b = random_tensor({4, 2}, rng.stream(101), 0);
        Tensor row = random_tensor({2}, rng.stream(102), 0);
        TapeLossFn fn = [&](Tape& t, const std::vector<Var>& v) {
            Var prod = t.matmul(v[0], v[1]);      // [3,2]
            Var biased = t.add_row(prod, v[2]);   // [3,2]
            Var both = t.concat_cols({prod, biased}); // [3,4]
            Var rows = t.gather_rows(both, {2, 0, 1, 2});
            Var flat = t.reshape(rows, {16});
            Var gath = t.gather_weighted(flat, {0, 3, 5, 1, 9, 2}, {0.5, 1.5, -1.0, 2.0, 0.25, 1.0},
                                         2, {3});
            return t.add(t.mean(t.mul(gath, gath)), t.mean(t.sub(prod, biased)));
        };
        CHECK(finite_diff_check({a, b, row}, fn).max_rel_error < 1e-4);
    }
}

TEST_CASE("forward/backward is bitwise deterministic for a fixed seed") {
    auto run = [] {
        CounterRng rng(99);
        MlpParams p = MlpParams::create({4, 8, 1}, Activation::relu, Activation::sigmoid, rng);
        Tensor x = random_tensor({6, 4}, rng.stream(4), 0);
        Tape tape;
        MlpVars mv = mlp_vars(tape, p, true);
        Var y = mlp_forward(tape, p, mv, tape.constant(x));
        Var loss = tape.mean(tape.square(y));
        tape.backward(loss);
        std::vector<double> out = tape.value(loss).data;
        for (Var w : mv.weights) {
            const Tensor& g = tape.grad(w);
            out.insert(out.end(), g.data.begin(), g.data.end());
        }
        return out;
    };
    CHECK(run() == run());
}

TEST_CASE("sigmoid output strictly inside (0,1) even for extreme logits") {
    Tape tape;
    Var x = tape.constant(Tensor({4}, {-1000.0, -40.0, 40.0, 1000.0}));
    const Tensor& y = tape.value(tape.sigmoid(x));
    for (double v : y.data) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("optimizer defaults match the intended training rates") {
    CHECK(OptimState::adam().lr == 2.5e-4);
    CHECK(OptimState::rmsprop().lr == 1e-3);
}

TEST_CASE("optimizer: zero gradient leaves parameters unchanged") {
    for (OptKind kind : {OptKind::adam, OptKind::rmsprop}) {
        OptimState opt = kind == OptKind::adam ? OptimState::adam(0.1) : OptimState::rmsprop(0.1);
        std::vector<Tensor> params = {random_tensor({5}, CounterRng(17), 0)};
        std::vector<Tensor> before = params;
        opt.init(params);
        opt.step(params, {Tensor::zeros({5})});
        CHECK(params[0].data == before[0].data);
        CHECK(opt.step_count == 1);
    }
}

TEST_CASE("optimizer: NaN gradient refused") {
    OptimState opt = OptimState::adam(0.1);
    std::vector<Tensor> params = {Tensor({2}, {1.0, 2.0})};
    opt.init(params);
    Tensor bad({2}, {0.1, std::nan("")});
    CHECK_THROWS_AS(opt.step(params, {bad}), NumericError);
    CHECK(params[0].data[0] == 1.0); // untouched
}

TEST_CASE("optimizer: step decay multiplies the rate at schedule boundaries") {
    OptimState opt = OptimState::adam(1.0);
    opt.decay_interval = 3;
    opt.decay_factor = 0.1;
    std::vector<Tensor> params = {Tensor({1}, {0.0})};
    opt.init(params);
    Tensor g({1}, {1.0});
    for (int i = 0; i < 3; ++i) opt.step(params, {g});
    CHECK(opt.lr == doctest::Approx(0.1));
    for (int i = 0; i < 3; ++i) opt.step(params, {g});
    CHECK(opt.lr == doctest::Approx(0.01));
}

TEST_CASE("optimizer: adam reduces a quadratic loss") {
    OptimState opt = OptimState::adam(0.05);
    std::vector<Tensor> params = {random_tensor({8}, CounterRng(23), 0)};
    opt.init(params);
    auto loss_of = [](const Tensor& w) {
        double s = 0;
        for (double v : w.data) s += v * v;
        return s;
    };
    double initial = loss_of(params[0]);
    for (int it = 0; it < 200; ++it) {
        Tensor g({8});
        for (std::size_t i = 0; i < 8; ++i) g.data[i] = 2.0 * params[0].data[i];
        opt.step(params, {g});
    }
    CHECK(loss_of(params[0]) < 1e-3 * initial);
}

TEST_CASE("finite_diff_check: quadratic loss error < 1e-8") {
    Tensor w = random_tensor({5}, CounterRng(29), 0);
    TapeLossFn fn = [](Tape& t, const std::vector<Var>& v) { return t.sum(t.square(v[0])); };
    CHECK(finite_diff_check({w}, fn).max_rel_error < 1e-8);
}

TEST_CASE("finite_diff_check: 3-layer sigmoid MLP error < 1e-4") {
    CounterRng rng(31);
    MlpParams p = MlpParams::create({2, 6, 6, 1}, Activation::sigmoid, Activation::sigmoid, rng);
    Tensor x = random_tensor({4, 2}, rng.stream(9), 0);
    TapeLossFn fn = [&](Tape& t, const std::vector<Var>& v) {
        MlpVars mv;
        for (std::size_t i = 0; i < p.weights.size(); ++i) {
            mv.weights.push_back(v[2 * i]);
            mv.biases.push_back(v[2 * i + 1]);
        }
        return t.mean(mlp_forward(t, p, mv, t.constant(x)));
    };
    CHECK(finite_diff_check(p.collect(), fn).max_rel_error < 1e-4);
}

TEST_CASE("finite_diff_check flags a corrupted gradient (one entry doubled)") {
    Tensor w = random_tensor({5}, CounterRng(37), 0, 0.5, 1.5);
    TapeLossFn fn = [](Tape& t, const std::vector<Var>& v) { return t.sum(t.square(v[0])); };

    std::vector<Tensor> grads;
    {
        Tape tape;
        Var wv = tape.param(w);
        tape.backward(fn(tape, {wv}));
        grads.push_back(tape.grad(wv));
    }
    grads[0].data[2] *= 2.0; // inject the fault
    GradCheckResult res = compare_gradients(grads, {w}, fn);
    CHECK(res.max_rel_error > 0.1);
    CHECK(res.worst_index == 2);
    CHECK_FALSE(res.ok(1e-4));
}

TEST_CASE("mlp checkpoint round trip and version safety") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "tcr_mlp_ckpt";
    fs::create_directories(dir);
    std::string path = (dir / "dec.mlp").string();

    CounterRng rng(41);
    MlpParams p = MlpParams::create({4, 8, 3}, Activation::relu, Activation::sigmoid, rng);
    save_mlp(p, path);
    MlpParams q = load_mlp(path);
    CHECK(q.layer_sizes == p.layer_sizes);
    CHECK(q.hidden == p.hidden);
    CHECK(q.output == p.output);
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
        CHECK(q.weights[i].data == p.weights[i].data);
        CHECK(q.biases[i].data == p.biases[i].data);
    }

    // Corrupt the version and expect rejection.
    {
        std::FILE* f = std::fopen(path.c_str(), "r+b");
        REQUIRE(f);
        std::fseek(f, 8, SEEK_SET); // the version digit of "tcr-mlp 1"
        std::fputc('9', f);
        std::fclose(f);
    }
    CHECK_THROWS_AS((void)load_mlp(path), IoError);
}
