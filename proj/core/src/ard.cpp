#include "mixopt/ard.hpp"

#include <fstream>
#include <stdexcept>

#include "csv_util.hpp"
#include "mixopt/rng.hpp"

namespace mixopt {

ArdFit fit_ard_lengthscales(const Eigen::MatrixXd& mixtures, const Eigen::VectorXd& scores,
                            FitConfig config) {
    if (mixtures.rows() < 4) {
        throw std::invalid_argument("fit_ard_lengthscales: need at least 4 observations");
    }
    GPInputs inputs{mixtures, Eigen::VectorXd::Ones(mixtures.rows())};

    // Shared-lengthscale fit first; its solution seeds the ARD search so the
    // richer model never lands below the nested one.
    config.ard = false;
    config.fit_scale_kernel = false;
    config.extra_inits.clear();
    const FittedGP shared = FittedGP::fit(inputs, scores, config);

    GPHyperparams warm = shared.fit_result()->hyperparams;
    warm.lengthscale = Eigen::VectorXd::Constant(mixtures.cols(), warm.lengthscale[0]);
    config.ard = true;
    config.extra_inits = {warm};
    const FittedGP ard = FittedGP::fit(std::move(inputs), scores, config);

    return ArdFit{ard.hyperparams().lengthscale, ard.fit_result()->log_marginal,
                  shared.fit_result()->log_marginal};
}

ImportanceMatrix importance_matrix(const RunTable& table, const std::string& fidelity_id,
                                   std::span<const std::string> benchmark_columns,
                                   const FitConfig& config) {
    if (benchmark_columns.empty()) {
        throw std::invalid_argument("importance_matrix: no benchmark columns");
    }
    if (!table.fidelities.contains(fidelity_id)) {
        throw std::invalid_argument("importance_matrix: unknown fidelity '" + fidelity_id + "'");
    }
    for (const std::string& column : benchmark_columns) {
        if (!table.has_metric(column)) {
            throw std::invalid_argument("importance_matrix: unknown metric column '" + column +
                                        "'");
        }
    }

    std::vector<const RunRow*> rows;
    for (const RunRow& row : table.rows) {
        if (row.fidelity_id == fidelity_id) rows.push_back(&row);
    }
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index d = static_cast<Eigen::Index>(table.domain_names.size());
    if (n < 4) {
        throw std::invalid_argument("importance_matrix: need at least 4 rows at fidelity '" +
                                    fidelity_id + "'");
    }
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) {
            X(i, k) = rows[static_cast<std::size_t>(i)]->mixture[static_cast<std::size_t>(k)];
        }
    }

    ImportanceMatrix matrix;
    matrix.domains = table.domain_names;
    matrix.benchmarks.assign(benchmark_columns.begin(), benchmark_columns.end());
    matrix.values.resize(d, static_cast<Eigen::Index>(benchmark_columns.size()));

    for (std::size_t j = 0; j < benchmark_columns.size(); ++j) {
        const std::string& column = benchmark_columns[j];
        const Orientation orientation = table.orientation_of(column);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y[i] = oriented_score(rows[static_cast<std::size_t>(i)]->metrics.at(column),
                                  orientation);
        }
        FitConfig per_column = config;
        per_column.seed = substream(config.seed, "ard-fit", j);
        const ArdFit fit = fit_ard_lengthscales(X, y, per_column);
        const Eigen::VectorXd inv = fit.lengthscales.cwiseInverse();
        matrix.values.col(static_cast<Eigen::Index>(j)) = inv / inv.maxCoeff();
    }
    return matrix;
}

void write_importance_csv(const ImportanceMatrix& matrix, const std::string& path) {
    if (matrix.values.rows() != static_cast<Eigen::Index>(matrix.domains.size()) ||
        matrix.values.cols() != static_cast<Eigen::Index>(matrix.benchmarks.size())) {
        throw std::invalid_argument("write_importance_csv: label/value shape mismatch");
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "domain";
    for (const std::string& b : matrix.benchmarks) out << ',' << csv::escape_field(b);
    out << '\n';
    char buf[40];
    for (Eigen::Index k = 0; k < matrix.values.rows(); ++k) {
        out << csv::escape_field(matrix.domains[static_cast<std::size_t>(k)]);
        for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", matrix.values(k, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

ImportanceMatrix load_importance_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    std::vector<std::string> header = csv::split_line(line);
    if (header.empty() || header[0] != "domain") {
        throw std::runtime_error(path + ": expected a 'domain' label column");
    }

    ImportanceMatrix matrix;
    matrix.benchmarks.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = csv::split_line(line);
        if (fields.size() != header.size()) {
            throw std::runtime_error(path + ": row '" + fields.front() + "' has bad field count");
        }
        matrix.domains.push_back(fields[0]);
        std::vector<double> values;
        for (std::size_t j = 1; j < fields.size(); ++j) {
            const auto v = csv::parse_double(fields[j]);
            if (!v) throw std::runtime_error(path + ": bad number '" + fields[j] + "'");
            values.push_back(*v);
        }
        rows.push_back(std::move(values));
    }
    matrix.values.resize(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(matrix.benchmarks.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (std::size_t j = 0; j < rows[k].size(); ++j) {
            matrix.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = rows[k][j];
        }
    }
    return matrix;
}

}  // namespace mixopt
