#pragma once

#include <string>
#include <vector>

#include "eseman/index.hpp"
#include "eseman/query.hpp"

namespace eseman {

// [{"track_lo":..,"track_hi":..,"begin":..,"end":..,"count":..,"exact":..,
//   "attrs":{"function":["foo"],"bytes":{"min":..,"max":..,"mean":..,"count":..}}}, ...]
// Timestamps and counts are JSON integers.
void append_slices_json(std::string& out, const std::vector<SummarySlice>& slices,
                        const AttrDictionary& dict);

// {"fetch_ns":..,"nodes":..,"hits":..,"bytes":..,"slices":..}
std::string stats_json(const FetchStats& s);

// {"slices": <payload>, "stats": <stats>}
std::string query_response_json(const QueryResult& r);

std::string datasets_json(const std::vector<DatasetDescriptor>& list);

std::string error_json(const std::string& message);

}  // namespace eseman
