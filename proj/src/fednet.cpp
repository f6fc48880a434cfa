#include "dpfda/fednet.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dpfda {
namespace fednet {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ProtocolRun run_protocol(int num_servers, int rounds, const Eigen::VectorXd& init,
                         const RoundFn& round_fn, const AggregateFn& aggregate_fn) {
  if (num_servers < 1) {
    throw std::invalid_argument("run_protocol: need at least one server");
  }
  if (rounds < 1) {
    throw std::invalid_argument("run_protocol: need at least one round");
  }
  ProtocolRun run;
  run.num_servers = num_servers;
  run.rounds = rounds;
  run.servers.resize(num_servers);
  run.iterate_history.reserve(rounds + 1);
  run.iterate_history.push_back(init);

  Eigen::VectorXd iterate = init;
  for (int t = 0; t < rounds; ++t) {
    std::vector<Transcript> round_messages;
    round_messages.reserve(num_servers);
    for (int s = 0; s < num_servers; ++s) {
      try {
        Transcript msg = round_fn(s, t, iterate);
        msg.server_id = s;
        msg.round = t;
        round_messages.push_back(std::move(msg));
      } catch (const std::exception& e) {
        throw std::runtime_error("run_protocol: server " + std::to_string(s) +
                                 " failed in round " + std::to_string(t) + ": " +
                                 e.what());
      }
    }
    iterate = aggregate_fn(iterate, round_messages);
    for (auto& msg : round_messages) {
      run.log.push_back(std::move(msg));
    }
    run.iterate_history.push_back(iterate);
  }
  return run;
}

std::vector<Eigen::VectorXd> replay(const ProtocolRun& run,
                                    const AggregateFn& aggregate_fn,
                                    const Eigen::VectorXd& init) {
  std::vector<Eigen::VectorXd> history;
  history.reserve(run.rounds + 1);
  history.push_back(init);
  Eigen::VectorXd iterate = init;
  for (int t = 0; t < run.rounds; ++t) {
    std::vector<Transcript> round_messages(
        run.log.begin() + static_cast<std::ptrdiff_t>(t) * run.num_servers,
        run.log.begin() + static_cast<std::ptrdiff_t>(t + 1) * run.num_servers);
    iterate = aggregate_fn(iterate, round_messages);
    history.push_back(iterate);
  }
  return history;
}

AuditReport audit_run(const ProtocolRun& run,
                      const std::vector<double>& raw_fingerprints) {
  AuditReport report;
  report.non_private_mode = !run.noise_enabled;

  {
    AuditCheck check{"log-shape", true, ""};
    const auto expected =
        static_cast<std::size_t>(run.num_servers) * static_cast<std::size_t>(run.rounds);
    if (run.log.size() != expected) {
      check.passed = false;
      check.detail = "expected " + std::to_string(expected) + " transcripts, got " +
                     std::to_string(run.log.size());
    } else {
      for (std::size_t i = 0; i < run.log.size(); ++i) {
        const int t = static_cast<int>(i) / run.num_servers;
        const int s = static_cast<int>(i) % run.num_servers;
        if (run.log[i].round != t || run.log[i].server_id != s) {
          check.passed = false;
          check.detail = "record " + std::to_string(i) + " out of (round, server) order";
          break;
        }
      }
    }
    report.checks.push_back(std::move(check));
  }

  {
    AuditCheck check{"provenance", true, ""};
    for (const auto& msg : run.log) {
      if (!verify_provenance(msg.payload, msg.server_id, msg.round,
                             msg.provenance_tag)) {
        check.passed = false;
        check.detail = "payload (server " + std::to_string(msg.server_id) + ", round " +
                       std::to_string(msg.round) + ") did not come from the mechanism";
        break;
      }
    }
    report.checks.push_back(std::move(check));
  }

  {
    AuditCheck check{"envelope", true, ""};
    for (const auto& msg : run.log) {
      if (msg.payload.size() != run.radii.size() ||
          msg.noise_scale_digest.size() != run.radii.size()) {
        check.passed = false;
        check.detail = "payload dimension mismatch";
        break;
      }
      for (Eigen::Index i = 0; i < msg.payload.size(); ++i) {
        const double bound =
            run.radii(i) + 6.0 * std::sqrt(std::max(msg.noise_scale_digest(i), 0.0));
        if (std::abs(msg.payload(i)) > bound) {
          check.passed = false;
          check.detail = "entry " + std::to_string(i) + " of (server " +
                         std::to_string(msg.server_id) + ", round " +
                         std::to_string(msg.round) + ") outside clip+noise envelope";
          break;
        }
      }
      if (!check.passed) {
        break;
      }
    }
    report.checks.push_back(std::move(check));
  }

  {
    // Byte-equality scan only; a payload could still encode raw data in ways
    // this does not see.
    AuditCheck check{"raw-fingerprints", true, ""};
    for (const auto& msg : run.log) {
      for (Eigen::Index i = 0; i < msg.payload.size() && check.passed; ++i) {
        for (double raw : raw_fingerprints) {
          if (raw != 0.0 && msg.payload(i) == raw) {
            check.passed = false;
            check.detail = "raw value appears verbatim in (server " +
                           std::to_string(msg.server_id) + ", round " +
                           std::to_string(msg.round) + ")";
            break;
          }
        }
      }
      if (!check.passed) {
        break;
      }
    }
    report.checks.push_back(std::move(check));
  }

  report.passed = true;
  for (const auto& check : report.checks) {
    report.passed = report.passed && check.passed;
  }
  return report;
}

void export_transcripts(const ProtocolRun& run, std::ostream& out) {
  out << "# dpfda-transcripts v1\n";
  out << "# run_id " << run.run_id << "\n";
  out << "# servers " << run.num_servers << " rounds " << run.rounds << " noise "
      << (run.noise_enabled ? 1 : 0) << "\n";
  out << "# radii";
  for (Eigen::Index i = 0; i < run.radii.size(); ++i) {
    out << ' ' << format_double(run.radii(i));
  }
  out << "\n";
  for (const auto& msg : run.log) {
    out << run.run_id << ' ' << msg.round << ' ' << msg.server_id << ' '
        << msg.provenance_tag;
    for (Eigen::Index i = 0; i < msg.payload.size(); ++i) {
      out << ' ' << format_double(msg.payload(i));
    }
    out << " |";
    for (Eigen::Index i = 0; i < msg.noise_scale_digest.size(); ++i) {
      out << ' ' << format_double(msg.noise_scale_digest(i));
    }
    out << "\n";
  }
}

ProtocolRun import_transcripts(std::istream& in) {
  ProtocolRun run;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# dpfda-transcripts", 0) != 0) {
    throw std::runtime_error("import_transcripts: missing header");
  }
  if (!std::getline(in, line) || line.rfind("# run_id ", 0) != 0) {
    throw std::runtime_error("import_transcripts: missing run id");
  }
  run.run_id = line.substr(9);
  if (!std::getline(in, line)) {
    throw std::runtime_error("import_transcripts: missing shape line");
  }
  {
    std::istringstream ss(line);
    std::string hash, word;
    int noise = 1;
    ss >> hash >> word >> run.num_servers >> word >> run.rounds >> word >> noise;
    if (!ss) {
      throw std::runtime_error("import_transcripts: malformed shape line");
    }
    run.noise_enabled = noise != 0;
  }
  if (!std::getline(in, line) || line.rfind("# radii", 0) != 0) {
    throw std::runtime_error("import_transcripts: missing radii line");
  }
  {
    std::istringstream ss(line.substr(7));
    std::vector<double> radii;
    double v;
    while (ss >> v) {
      radii.push_back(v);
    }
    run.radii = Eigen::Map<Eigen::VectorXd>(radii.data(),
                                            static_cast<Eigen::Index>(radii.size()));
  }
  run.servers.resize(run.num_servers);
  int line_no = 4;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::istringstream ss(line);
    Transcript msg;
    std::string run_id;
    ss >> run_id >> msg.round >> msg.server_id >> msg.provenance_tag;
    if (!ss) {
      throw std::runtime_error("import_transcripts: malformed record at line " +
                               std::to_string(line_no));
    }
    std::vector<double> payload;
    std::string token;
    bool in_digest = false;
    std::vector<double> digest;
    while (ss >> token) {
      if (token == "|") {
        in_digest = true;
        continue;
      }
      (in_digest ? digest : payload).push_back(std::stod(token));
    }
    msg.payload = Eigen::Map<Eigen::VectorXd>(payload.data(),
                                              static_cast<Eigen::Index>(payload.size()));
    msg.noise_scale_digest =
        Eigen::Map<Eigen::VectorXd>(digest.data(), static_cast<Eigen::Index>(digest.size()));
    run.log.push_back(std::move(msg));
  }
  return run;
}

}  // namespace fednet
}  // namespace dpfda
