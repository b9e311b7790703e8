#pragma once

#include <string>

#include <json.hpp>

#include "tunevault/archive_store.hpp"
#include "tunevault/beam.hpp"
#include "tunevault/catalog.hpp"
#include "tunevault/channel_db.hpp"
#include "tunevault/error.hpp"
#include "tunevault/query_engine.hpp"
#include "tunevault/tune_engine.hpp"

// Canonical JSON bodies shared by the server and the admin client. Objects
// keep field order (ordered_json) and are emitted compact, so one value has
// exactly one serialization.
namespace tunevault::wire {

using Json = nlohmann::ordered_json;

Json to_json(const Value& v);
/// Decodes a channel value for a channel of type `tag`. Integral JSON numbers
/// are accepted for float64 channels; anything else off-type is TypeMismatch.
Value value_from_json(const Json& j, ValueTag tag);

Json to_json(const ChannelRecord& r);
Json to_json(const TableSchema& s);
Json to_json(const Cell& c);
Json to_json(const QueryResult& r);
Json to_json(const BeamParameters& b);
Json to_json(const Kinematics& k);
Json to_json(const ScaleFactorSet& f);
Json to_json(const RestoreReport& r);
Json to_json(const TuneRow& t);
Json to_json(const TuneData& t);
Json to_json(const SnapshotRow& s);
Json to_json(const SnapshotData& s);
Json to_json(const StepperPreset& p);

/// Throws BadRequest for malformed structure; type errors in literals are
/// left for query validation so they surface as TYPE_MISMATCH.
QuerySpec query_spec_from_json(const Json& j);
Json to_json(const QuerySpec& q);
Literal literal_from_json(const Json& j);

/// Throws InvalidBeam.
BeamParameters beam_from_json(const Json& j);

Json error_body(ErrorCode code, const std::string& message);

/// Parses a request body, mapping syntax errors to BadRequest.
Json parse_body(const std::string& body);

}  // namespace tunevault::wire
