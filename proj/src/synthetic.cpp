// SPDX-License-Identifier: Apache-2.0
#include "nids/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

namespace nids::synthetic {

std::vector<SequenceWindow> spike_windows(std::size_t count, int window, int features,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.03);
  std::vector<SequenceWindow> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    SequenceWindow w;
    w.label = static_cast<std::uint8_t>(k % 2);
    w.origin_index = k;
    w.x.resize(window, features);
    for (int f = 0; f < features; ++f) {
      double level = 0.1 + 0.3 * unit(rng);
      for (int t = 0; t < window; ++t) {
        level = std::clamp(level + 0.02 * (unit(rng) - 0.5), 0.1, 0.4);
        w.x(t, f) = std::clamp(level + noise(rng), 0.0, 1.0);
      }
    }
    if (w.label == 1) {
      const int at = static_cast<int>(unit(rng) * (window - 1));
      std::vector<int> order(features);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      const int hit = 1 + static_cast<int>(unit(rng) * std::min(features, 2));
      for (int s = 0; s < hit; ++s) {
        const int f = order[s];
        const double height = 0.45 + 0.1 * unit(rng);
        w.x(at, f) = std::min(1.0, w.x(at, f) + height);
        if (at + 1 < window) w.x(at + 1, f) = std::min(1.0, w.x(at + 1, f) + 0.5 * height);
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

namespace {

struct Flow {
  std::string src_ip, dst_ip;
  int src_port = 0, dst_port = 0, protocol = 6;
  double l7 = 0.0;
  long in_bytes = 0, out_bytes = 0, in_pkts = 0, out_pkts = 0;
  int tcp_flags = 0;
  long duration_ms = 0;
  int label = 0;
  const char* attack = "Benign";
};

class FlowSampler {
 public:
  explicit FlowSampler(std::uint64_t seed) : rng_(seed) {}

  long uniform(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(rng_); }
  double real() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  long lognormal(double median, double sigma) {
    return std::max(1L, std::lround(median * std::exp(sigma * normal_(rng_))));
  }
  std::string lan_host() { return "192.168.100." + std::to_string(uniform(3, 150)); }
  std::string wan_host() {
    return std::to_string(uniform(11, 223)) + "." + std::to_string(uniform(0, 255)) + "." +
           std::to_string(uniform(0, 255)) + "." + std::to_string(uniform(1, 254));
  }

  Flow benign() {
    Flow f;
    f.src_ip = lan_host();
    f.dst_ip = real() < 0.3 ? lan_host() : wan_host();
    f.src_port = static_cast<int>(uniform(1024, 65535));
    const double kind = real();
    if (kind < 0.30) {  // dns
      f.protocol = 17;
      f.dst_port = 53;
      f.l7 = 5.0;
      f.in_pkts = 1;
      f.out_pkts = 1;
      f.in_bytes = uniform(60, 120);
      f.out_bytes = uniform(100, 420);
      f.duration_ms = uniform(0, 40);
    } else if (kind < 0.75) {  // web
      f.protocol = 6;
      f.dst_port = real() < 0.6 ? 443 : 80;
      f.l7 = f.dst_port == 443 ? 91.0 : 7.0;
      f.in_pkts = uniform(5, 40);
      f.out_pkts = f.in_pkts + uniform(0, 120);
      f.in_bytes = f.in_pkts * uniform(60, 400);
      f.out_bytes = f.out_pkts * uniform(200, 1400);
      f.tcp_flags = real() < 0.7 ? 27 : 31;
      f.duration_ms = lognormal(1500.0, 1.2);
    } else if (kind < 0.93) {  // mqtt telemetry
      f.protocol = 6;
      f.dst_port = 1883;
      f.l7 = 222.0;
      f.in_pkts = uniform(4, 20);
      f.out_pkts = uniform(3, 15);
      f.in_bytes = f.in_pkts * uniform(60, 200);
      f.out_bytes = f.out_pkts * uniform(52, 120);
      f.tcp_flags = 27;
      f.duration_ms = lognormal(20000.0, 0.8);
    } else if (kind < 0.97) {  // ntp
      f.protocol = 17;
      f.dst_port = 123;
      f.l7 = 9.0;
      f.in_pkts = 1;
      f.out_pkts = 1;
      f.in_bytes = 76;
      f.out_bytes = 76;
      f.duration_ms = uniform(0, 5);
    } else {  // unanswered connection attempt; looks like scan traffic
      f.protocol = 6;
      f.dst_port = real() < 0.5 ? 443 : 8080;
      f.l7 = 0.0;
      f.in_pkts = uniform(1, 3);
      f.in_bytes = 60 * f.in_pkts;
      f.tcp_flags = 2;
      f.duration_ms = uniform(0, 3000);
    }
    return f;
  }

  Flow attack(int campaign, const std::string& victim) {
    Flow f;
    f.label = 1;
    f.dst_ip = victim;
    f.src_port = static_cast<int>(uniform(1024, 65535));
    switch (campaign) {
      case 0:  // DDoS SYN / UDP flood from many sources
      case 1:  // DoS from a single attacker
        f.attack = campaign == 0 ? "DDoS" : "DoS";
        f.src_ip = campaign == 0 ? wan_host() : "192.168.100.147";
        if (real() < 0.55) {
          f.protocol = 6;
          f.dst_port = 80;
          f.l7 = real() < 0.3 ? 7.0 : 0.0;
          f.in_pkts = uniform(1, 4);
          f.in_bytes = f.in_pkts * uniform(40, 60);
          f.out_pkts = real() < 0.2 ? 1 : 0;
          f.out_bytes = 40 * f.out_pkts;
          f.tcp_flags = f.out_pkts ? 22 : 2;
          f.duration_ms = uniform(0, 2);
        } else {
          f.protocol = 17;
          f.dst_port = static_cast<int>(uniform(1, 65535));
          f.l7 = 0.0;
          f.in_pkts = uniform(1, 6);
          f.in_bytes = f.in_pkts * uniform(100, 1000);
          f.duration_ms = f.in_pkts > 1 ? uniform(0, 1500) : 0;
        }
        break;
      case 2:  // reconnaissance: port / service scans
        f.attack = "Reconnaissance";
        f.src_ip = "192.168.100.150";
        f.protocol = real() < 0.85 ? 6 : 17;
        f.dst_port = static_cast<int>(uniform(1, 1024));
        f.in_pkts = 1;
        f.in_bytes = f.protocol == 6 ? uniform(40, 44) : uniform(28, 60);
        f.out_pkts = real() < 0.5 ? 1 : 0;
        f.out_bytes = f.out_pkts * 40;
        f.tcp_flags = f.protocol == 6 ? (f.out_pkts ? 22 : 2) : 0;
        f.duration_ms = 0;
        break;
      default:  // theft: keylogging / exfiltration over http or ftp
        f.attack = "Theft";
        f.src_ip = victim;
        f.dst_ip = "192.168.100.150";
        f.protocol = 6;
        f.dst_port = real() < 0.5 ? 80 : 21;
        f.l7 = f.dst_port == 80 ? 7.0 : 1.0;
        f.in_pkts = uniform(20, 200);
        f.out_pkts = uniform(3, 12);
        f.in_bytes = f.in_pkts * uniform(800, 1460);
        f.out_bytes = f.out_pkts * uniform(52, 80);
        f.tcp_flags = 24;
        f.duration_ms = lognormal(60000.0, 0.5);
        break;
    }
    return f;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace

void write_netflow_csv(std::ostream& out, const NetflowOptions& options) {
  FlowSampler sampler(options.seed);
  std::mt19937_64 layout(options.seed ^ 0x5bd1e995ULL);

  const auto benign_count = static_cast<std::size_t>(
      std::llround(static_cast<double>(options.rows) * options.benign_fraction));
  std::vector<bool> is_benign(options.rows, false);
  std::fill(is_benign.begin(),
            is_benign.begin() + static_cast<std::ptrdiff_t>(std::min(benign_count, options.rows)),
            true);
  std::shuffle(is_benign.begin(), is_benign.end(), layout);

  out << "IPV4_SRC_ADDR,L4_SRC_PORT,IPV4_DST_ADDR,L4_DST_PORT,PROTOCOL,L7_PROTO,IN_BYTES,"
         "OUT_BYTES,IN_PKTS,OUT_PKTS,TCP_FLAGS,FLOW_DURATION_MILLISECONDS";
  if (options.with_labels) out << ",Label,Attack";
  out << '\n';

  // campaign mix roughly follows the benchmark: DoS and DDoS dominate
  std::discrete_distribution<int> pick_campaign({0.45, 0.42, 0.125, 0.005});
  int campaign = pick_campaign(layout);
  std::string victim = "192.168.100." + std::to_string(3 + campaign);
  std::geometric_distribution<int> campaign_length(1.0 / 400.0);
  long remaining = campaign_length(layout) + 1;

  for (std::size_t r = 0; r < options.rows; ++r) {
    Flow f;
    if (is_benign[r]) {
      f = sampler.benign();
    } else {
      if (remaining-- <= 0) {
        campaign = pick_campaign(layout);
        victim = "192.168.100." + std::to_string(3 + static_cast<int>(layout() % 5));
        remaining = campaign_length(layout) + 1;
      }
      f = sampler.attack(campaign, victim);
    }
    out << f.src_ip << ',' << f.src_port << ',' << f.dst_ip << ',' << f.dst_port << ','
        << f.protocol << ',' << std::to_string(f.l7).substr(0, std::to_string(f.l7).find('.') + 2)
        << ',' << f.in_bytes << ',' << f.out_bytes << ',' << f.in_pkts << ',' << f.out_pkts << ','
        << f.tcp_flags << ',' << f.duration_ms;
    if (options.with_labels) out << ',' << f.label << ',' << f.attack;
    out << '\n';
  }
}

}  // namespace nids::synthetic
