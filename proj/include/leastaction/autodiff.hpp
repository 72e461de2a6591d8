#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace leastaction::ad {

// Reverse-mode tape over scalars. Every recorded node keeps at most two
// parents together with the local partial derivatives; backward() performs a
// single reverse sweep accumulating adjoints. Nodes whose parent index equals
// their own index are roots (leaves and constants).
class Tape {
public:
    struct Node {
        double w0, w1;
        std::uint32_t p0, p1;
    };

    std::uint32_t leaf() {
        const std::uint32_t i = next_index();
        nodes_.push_back(Node{0.0, 0.0, i, i});
        return i;
    }

    std::uint32_t unary(std::uint32_t parent, double w) {
        const std::uint32_t i = next_index();
        nodes_.push_back(Node{w, 0.0, parent, i});
        return i;
    }

    std::uint32_t binary(std::uint32_t pa, double wa, std::uint32_t pb, double wb) {
        const std::uint32_t i = next_index();
        nodes_.push_back(Node{wa, wb, pa, pb});
        return i;
    }

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }
    void reserve(std::size_t n) { nodes_.reserve(n); }

    // Adjoints of every node with d(output)/d(output) = 1. The adjoint
    // buffer is reusable across calls to avoid reallocation in hot loops.
    void backward(std::uint32_t output, std::vector<double>& adjoint) const {
        assert(output < nodes_.size());
        adjoint.assign(nodes_.size(), 0.0);
        adjoint[output] = 1.0;
        for (std::uint32_t i = output + 1; i-- > 0;) {
            const double a = adjoint[i];
            if (a == 0.0) continue;
            const Node& n = nodes_[i];
            if (n.p0 != i) adjoint[n.p0] += n.w0 * a;
            if (n.p1 != i) adjoint[n.p1] += n.w1 * a;
        }
    }

private:
    std::uint32_t next_index() const { return static_cast<std::uint32_t>(nodes_.size()); }
    std::vector<Node> nodes_;
};

// Thread-local tape used by Rev arithmetic.
inline Tape*& active_tape() {
    thread_local Tape* tape = nullptr;
    return tape;
}

// Activates a tape for the current thread for the lifetime of the scope.
class TapeScope {
public:
    explicit TapeScope(Tape& tape) : previous_(active_tape()) { active_tape() = &tape; }
    ~TapeScope() { active_tape() = previous_; }
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* previous_;
};

// Recorded scalar. Implicit construction from double registers a root node on
// the active tape, so plain numeric code can be instantiated with Rev in place
// of double. Requires an active TapeScope.
struct Rev {
    double v = 0.0;
    std::uint32_t idx = 0;

    Rev() : Rev(0.0) {}
    Rev(double value) : v(value), idx(active_tape()->leaf()) {}
    Rev(double value, std::uint32_t index) : v(value), idx(index) {}
};

// value() lets generic code branch on magnitudes for either scalar type.
inline double value(const Rev& x) { return x.v; }
constexpr double value(double x) { return x; }

inline Rev operator+(const Rev& a, const Rev& b) {
    return {a.v + b.v, active_tape()->binary(a.idx, 1.0, b.idx, 1.0)};
}
inline Rev operator+(const Rev& a, double b) {
    return {a.v + b, active_tape()->unary(a.idx, 1.0)};
}
inline Rev operator+(double a, const Rev& b) {
    return {a + b.v, active_tape()->unary(b.idx, 1.0)};
}

inline Rev operator-(const Rev& a, const Rev& b) {
    return {a.v - b.v, active_tape()->binary(a.idx, 1.0, b.idx, -1.0)};
}
inline Rev operator-(const Rev& a, double b) {
    return {a.v - b, active_tape()->unary(a.idx, 1.0)};
}
inline Rev operator-(double a, const Rev& b) {
    return {a - b.v, active_tape()->unary(b.idx, -1.0)};
}
inline Rev operator-(const Rev& a) {
    return {-a.v, active_tape()->unary(a.idx, -1.0)};
}

inline Rev operator*(const Rev& a, const Rev& b) {
    return {a.v * b.v, active_tape()->binary(a.idx, b.v, b.idx, a.v)};
}
inline Rev operator*(const Rev& a, double b) {
    return {a.v * b, active_tape()->unary(a.idx, b)};
}
inline Rev operator*(double a, const Rev& b) {
    return {a * b.v, active_tape()->unary(b.idx, a)};
}

inline Rev operator/(const Rev& a, const Rev& b) {
    const double inv = 1.0 / b.v;
    return {a.v / b.v, active_tape()->binary(a.idx, inv, b.idx, -a.v * inv * inv)};
}
inline Rev operator/(const Rev& a, double b) {
    return {a.v / b, active_tape()->unary(a.idx, 1.0 / b)};
}
inline Rev operator/(double a, const Rev& b) {
    const double inv = 1.0 / b.v;
    return {a / b.v, active_tape()->unary(b.idx, -a * inv * inv)};
}

inline Rev sin(const Rev& x) {
    return {std::sin(x.v), active_tape()->unary(x.idx, std::cos(x.v))};
}
inline Rev cos(const Rev& x) {
    return {std::cos(x.v), active_tape()->unary(x.idx, -std::sin(x.v))};
}
inline Rev sqrt(const Rev& x) {
    const double r = std::sqrt(x.v);
    return {r, active_tape()->unary(x.idx, 0.5 / r)};
}
inline Rev exp(const Rev& x) {
    const double e = std::exp(x.v);
    return {e, active_tape()->unary(x.idx, e)};
}
inline Rev log(const Rev& x) {
    return {std::log(x.v), active_tape()->unary(x.idx, 1.0 / x.v)};
}

// d(output)/d(input_i) for the first n_inputs leaves created on the tape.
inline std::vector<double> gradient(const Tape& tape, const Rev& output, std::size_t n_inputs,
                                    std::vector<double>& adjoint_buffer) {
    tape.backward(output.idx, adjoint_buffer);
    return std::vector<double>(adjoint_buffer.begin(),
                               adjoint_buffer.begin() + static_cast<std::ptrdiff_t>(n_inputs));
}

}  // namespace leastaction::ad
