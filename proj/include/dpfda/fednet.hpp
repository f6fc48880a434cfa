#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dpfda/privacy.hpp"

namespace dpfda {
namespace fednet {

/// One privatized gradient message. The only object that crosses the server
/// boundary.
struct Transcript {
  int server_id = 0;
  int round = 0;
  Eigen::VectorXd payload;
  Eigen::VectorXd noise_scale_digest;  // per-coordinate sigma^2 used
  std::uint64_t provenance_tag = 0;
};

struct ServerBookkeeping {
  int subject_count = 0;
  int batch_size = 0;
};

struct ProtocolRun {
  std::string run_id;
  int num_servers = 0;
  int rounds = 0;
  bool noise_enabled = true;
  Eigen::VectorXd radii;  // clip radii shared by all servers
  std::vector<ServerBookkeeping> servers;
  std::vector<Transcript> log;                  // append-only, (round, server) order
  std::vector<Eigen::VectorXd> iterate_history;  // length rounds + 1
};

using RoundFn =
    std::function<Transcript(int server_id, int round, const Eigen::VectorXd& iterate)>;
using AggregateFn = std::function<Eigen::VectorXd(
    const Eigen::VectorXd& iterate, const std::vector<Transcript>& round_messages)>;

/// Runs T rounds: every server produces a transcript from the current
/// iterate and its own closure state, then the coordinator folds the round's
/// transcripts into the next iterate. Server exceptions propagate annotated
/// with the server id.
ProtocolRun run_protocol(int num_servers, int rounds, const Eigen::VectorXd& init,
                         const RoundFn& round_fn, const AggregateFn& aggregate_fn);

/// Reconstructs the iterate history from the transcript log alone.
std::vector<Eigen::VectorXd> replay(const ProtocolRun& run,
                                    const AggregateFn& aggregate_fn,
                                    const Eigen::VectorXd& init);

struct AuditCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct AuditReport {
  bool passed = false;
  bool non_private_mode = false;
  std::vector<AuditCheck> checks;
};

/// Validates that a completed run only released sanctioned payloads:
/// provenance tags verify, the log has exactly S*T records in order, payload
/// magnitudes stay inside the clip + noise envelope, and no raw response
/// value appears verbatim in any payload (a heuristic byte-equality scan).
AuditReport audit_run(const ProtocolRun& run,
                      const std::vector<double>& raw_fingerprints);

void export_transcripts(const ProtocolRun& run, std::ostream& out);
ProtocolRun import_transcripts(std::istream& in);

}  // namespace fednet
}  // namespace dpfda
