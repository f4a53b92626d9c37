#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vo/event_log.hpp"
#include "vo/ontology.hpp"
#include "vo/reconciliation.hpp"

namespace vo {

/// Registry (UDDI-role) entry.
struct ServiceRecord {
  std::string service_id;
  std::set<ConceptId> capabilities;
  std::string stub_id;
  std::string provider;
  std::string description;
  std::int64_t registry_index = 0;

  bool operator==(const ServiceRecord&) const = default;
};

/// Directory (MDS-role) entry for a host running one service.
struct ResourceRecord {
  std::string resource_id;
  std::string service_name;
  std::int64_t registry_index = 0;
  std::map<std::string, Literal> metrics;
  Tick observed_at = 0;

  bool operator==(const ResourceRecord&) const = default;
};

/// Mediator entry: which stub realizes a capability through which service.
struct CapabilityAssociation {
  ConceptId capability;
  std::string service_id;
  std::string stub_id;

  auto operator<=>(const CapabilityAssociation&) const = default;
};

struct DiscoveryQuery {
  ConceptId capability;
  std::vector<Condition> constraints;
  std::optional<Tick> freshness;  // maximum age in ticks
};

/// Kind and unit every reading of a metric must carry.
struct MetricSpec {
  LiteralKind kind = LiteralKind::Decimal;
  std::optional<std::string> unit;
  bool operator==(const MetricSpec&) const = default;
};

inline constexpr std::string_view kCpuUtilization = "cpu_utilization";
inline constexpr std::string_view kMemoryFree = "memory_free";
inline constexpr std::string_view kBandwidth = "bandwidth";

/// Registry, directory and mediator associations as one value, so a
/// discovery run always sees a consistent snapshot of all three.
class Catalog {
 public:
  Catalog();

  /// Replaces any record with the same id. Throws DanglingReference when the
  /// stub is unknown or serves none of the capabilities, DuplicateIndex when
  /// another service holds the index, UnknownConcept for undeclared capabilities.
  void register_service(const ServiceRecord& record, const OntologyGraph& services,
                        const std::map<std::string, StubBinding>& stubs);
  /// Throws DanglingReference when the index or service name does not match a
  /// registered service, InvalidRecord for out-of-range readings.
  void register_resource(const ResourceRecord& record);
  /// Declares a metric's kind and unit; re-declaring with a different spec is a KindMismatch.
  void register_metric(const std::string& name, const MetricSpec& spec);
  /// Updates one metric of a resource and stamps it with `now`.
  void record_telemetry(const std::string& resource_id, const std::string& metric, const Literal& value, Tick now);

  const std::map<std::string, ServiceRecord>& services() const { return services_; }
  const std::map<std::string, ResourceRecord>& resources() const { return resources_; }
  const std::set<CapabilityAssociation>& associations() const { return associations_; }
  const std::map<std::string, MetricSpec>& metrics() const { return metrics_; }

  /// Services ordered by registry index.
  std::vector<ServiceRecord> services_by_index() const;

  bool operator==(const Catalog&) const = default;

 private:
  void check_metric(const std::string& name, const Literal& value);

  std::map<std::string, ServiceRecord> services_;
  std::map<std::string, ResourceRecord> resources_;
  std::set<CapabilityAssociation> associations_;
  std::map<std::string, MetricSpec> metrics_;
};

/// Services with some capability the query capability subsumes, by registry index.
std::vector<ServiceRecord> match_capability(const Catalog& catalog, const OntologyGraph& services,
                                            const DiscoveryQuery& q);

/// Keeps services backed by at least one resource record satisfying every
/// constraint (and the freshness bound, when set). With no constraints and no
/// freshness bound the list is returned unchanged.
std::vector<ServiceRecord> filter_by_resources(const Catalog& catalog, const std::vector<ServiceRecord>& services,
                                               const DiscoveryQuery& q, Tick now);

struct DiscoveryResult {
  std::vector<std::string> stubs;
  std::size_t matched = 0;
  std::size_t filtered = 0;
};

/// Full pipeline; logs one "discover" record with the stage cardinalities.
DiscoveryResult discover(const Catalog& catalog, const OntologyGraph& services, const DiscoveryQuery& q, Tick now,
                         EventLog* log = nullptr);

/// "--where" expression parser shared by the CLI and scenario scripts.
DiscoveryQuery make_query(std::string_view capability, const std::vector<std::string>& where,
                          std::optional<Tick> freshness = std::nullopt);

// --- files ------------------------------------------------------------------

/// `service <id> caps=<c1,c2> stub=<stub_id> provider=<p> index=<n> [desc=<text to end of line>]`
ServiceRecord parse_service_line(std::string_view line);
std::string render_service_line(const ServiceRecord& r);
/// `resource <id> service=<name> index=<n> [cpu=<pct>] [mem=<MB>] [bw=<Mbps>] [m.<name>=<literal>]... at=<tick>`
ResourceRecord parse_resource_line(std::string_view line);
std::string render_resource_line(const ResourceRecord& r);

std::vector<ServiceRecord> parse_registry(std::string_view content);
struct DirectoryFile {
  std::map<std::string, MetricSpec> metrics;  // from `metric <name> <kind>[@<unit>]` lines
  std::vector<ResourceRecord> resources;
};
DirectoryFile parse_directory(std::string_view content);
std::string serialize_registry(const Catalog& catalog);
std::string serialize_directory(const Catalog& catalog);

}  // namespace vo
