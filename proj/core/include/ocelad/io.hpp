#pragma once

#include "ocelad/experiment.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ocelad {

/// Thrown for malformed input files; line is 1-based (0 when not applicable).
class FormatError : public std::runtime_error {
  public:
    FormatError(const std::string &source, std::size_t line, const std::string &what)
        : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " +
                             what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Shortest text that reads back to the same double (17 significant digits).
std::string format_double(double v);

// Constraint CSV: header t,y,x_0..x_{n-1},z_0..z_{n-1}; one constraint per row.
void write_constraints_csv(std::ostream &out, const std::vector<Constraint> &constraints);
void write_constraints_csv(const std::filesystem::path &path, const std::vector<Constraint> &constraints);

/// Parses a constraint CSV. An empty input yields an empty stream.
std::vector<Constraint> read_constraints_csv(std::istream &in, const std::string &source = "<stream>");
std::vector<Constraint> ingest_constraints(const std::filesystem::path &path);

// Step-record CSV: trial,t,combined_loss,knn_error,nmi,active_levels,weights_json
inline constexpr const char *kStepHeader = "trial,t,combined_loss,knn_error,nmi,active_levels,weights_json";
void write_step_csv(std::ostream &out, const std::vector<StepRecord> &records);

// Aggregate CSV: t,mean_knn_error,p_nmi_exceeds,mean_combined_loss
inline constexpr const char *kAggregateHeader = "t,mean_knn_error,p_nmi_exceeds,mean_combined_loss";
void write_aggregate_csv(std::ostream &out, const std::vector<AggregateRow> &rows);

/// Atomic write of a checkpoint JSON document.
void save_checkpoint(const std::filesystem::path &path, const nlohmann::json &checkpoint);

/// Reads and parses a checkpoint file; throws FormatError on corruption.
nlohmann::json load_checkpoint(const std::filesystem::path &path);

} // namespace ocelad
