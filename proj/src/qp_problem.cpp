#include "boilerctl/qp_problem.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace boilerctl {

void ControlConstraints::validate() const {
    const Eigen::Index n = lower.size();
    if (upper.size() != n) throw DataError("constraints: bound length mismatch");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(lower[i] <= upper[i]))
            throw DataError("constraints: lower > upper at index " + std::to_string(i));
    if (ineq_a.rows() != ineq_b.size())
        throw DataError("constraints: inequality row count mismatch");
    if (eq_a.rows() != eq_b.size())
        throw DataError("constraints: equality row count mismatch");
    if (ineq_a.rows() > 0 && ineq_a.cols() != n)
        throw DataError("constraints: inequality column count mismatch");
    if (eq_a.rows() > 0 && eq_a.cols() != n)
        throw DataError("constraints: equality column count mismatch");
}

ControlConstraints ControlConstraints::box(const Eigen::VectorXd& lower,
                                           const Eigen::VectorXd& upper) {
    ControlConstraints c;
    c.lower = lower;
    c.upper = upper;
    c.ineq_a.resize(0, lower.size());
    c.ineq_b.resize(0);
    c.eq_a.resize(0, lower.size());
    c.eq_b.resize(0);
    c.validate();
    return c;
}

double QpProblem::objective_at(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(h * x) + f.dot(x) + c;
}

void QpProblem::validate() const {
    const Eigen::Index nn = f.size();
    if (h.rows() != nn || h.cols() != nn) throw DataError("qp: H dimension mismatch");
    constraints.validate();
    if (constraints.n_variables() != nn) throw DataError("qp: constraint dimension mismatch");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    const double asym = (h - h.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * scale) throw DataError("qp: H is not symmetric");
    if (nn > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
        const double min_eig = es.eigenvalues().minCoeff();
        if (min_eig < -1e-9 * scale)
            throw DataError("qp: H is not positive semidefinite (min eigenvalue " +
                            std::to_string(min_eig) + ")");
    }
}

void add_ridge(QpProblem& p, double delta) {
    p.h.diagonal().array() += delta;
    p.provenance.ridge_delta += delta;
}

namespace {

void write_num(std::ostream& os, double v) {
    if (std::isinf(v)) {
        os << (v > 0 ? "inf" : "-inf");
        return;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

double read_num(std::istream& is) {
    std::string tok;
    if (!(is >> tok)) throw DataError("qp file: unexpected end of input");
    if (tok == "inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw DataError("qp file: bad number '" + tok + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw DataError("qp file: bad number '" + tok + "'");
    }
}

}  // namespace

void write_qp_file(const std::filesystem::path& path, const QpProblem& p) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    const Eigen::Index n = p.n();
    out << "qp 1\n";
    out << "n " << n << '\n';
    out << "h\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j) out << ' ';
            write_num(out, p.h(i, j));
        }
        out << '\n';
    }
    out << "f\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i) out << ' ';
        write_num(out, p.f[i]);
    }
    out << "\nc ";
    write_num(out, p.c);
    out << "\nlower\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i) out << ' ';
        write_num(out, p.constraints.lower[i]);
    }
    out << "\nupper\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i) out << ' ';
        write_num(out, p.constraints.upper[i]);
    }
    out << "\nineq " << p.constraints.ineq_a.rows() << '\n';
    for (Eigen::Index r = 0; r < p.constraints.ineq_a.rows(); ++r) {
        for (Eigen::Index j = 0; j < n; ++j) {
            write_num(out, p.constraints.ineq_a(r, j));
            out << ' ';
        }
        write_num(out, p.constraints.ineq_b[r]);
        out << '\n';
    }
    out << "eq " << p.constraints.eq_a.rows() << '\n';
    for (Eigen::Index r = 0; r < p.constraints.eq_a.rows(); ++r) {
        for (Eigen::Index j = 0; j < n; ++j) {
            write_num(out, p.constraints.eq_a(r, j));
            out << ' ';
        }
        write_num(out, p.constraints.eq_b[r]);
        out << '\n';
    }
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

QpProblem read_qp_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string tok;
    int version = 0;
    if (!(in >> tok >> version) || tok != "qp" || version != 1)
        throw DataError("qp file: bad header in '" + path.string() + "'");
    Eigen::Index n = 0;
    if (!(in >> tok >> n) || tok != "n" || n < 0)
        throw DataError("qp file: bad dimension line");

    QpProblem p;
    p.h.resize(n, n);
    p.f.resize(n);
    p.constraints.lower.resize(n);
    p.constraints.upper.resize(n);

    auto expect = [&](const char* want) {
        if (!(in >> tok) || tok != want)
            throw DataError(std::string("qp file: expected '") + want + "'");
    };
    expect("h");
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) p.h(i, j) = read_num(in);
    expect("f");
    for (Eigen::Index i = 0; i < n; ++i) p.f[i] = read_num(in);
    expect("c");
    p.c = read_num(in);
    expect("lower");
    for (Eigen::Index i = 0; i < n; ++i) p.constraints.lower[i] = read_num(in);
    expect("upper");
    for (Eigen::Index i = 0; i < n; ++i) p.constraints.upper[i] = read_num(in);
    expect("ineq");
    Eigen::Index m = 0;
    if (!(in >> m) || m < 0) throw DataError("qp file: bad inequality count");
    p.constraints.ineq_a.resize(m, n);
    p.constraints.ineq_b.resize(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index j = 0; j < n; ++j) p.constraints.ineq_a(r, j) = read_num(in);
        p.constraints.ineq_b[r] = read_num(in);
    }
    expect("eq");
    Eigen::Index q = 0;
    if (!(in >> q) || q < 0) throw DataError("qp file: bad equality count");
    p.constraints.eq_a.resize(q, n);
    p.constraints.eq_b.resize(q);
    for (Eigen::Index r = 0; r < q; ++r) {
        for (Eigen::Index j = 0; j < n; ++j) p.constraints.eq_a(r, j) = read_num(in);
        p.constraints.eq_b[r] = read_num(in);
    }
    p.constraints.validate();
    return p;
}

}  // namespace boilerctl
