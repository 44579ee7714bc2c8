#pragma once

#include <stdexcept>
#include <string>

namespace fogline {

enum class Errc {
  InvalidArgument,
  // overlay
  SubnetExhausted,
  DuplicateVpnIp,
  UnknownPeer,
  OverlappingRanges,
  // cluster
  BadToken,
  DuplicateNode,
  UnreachableServer,
  MalformedDocument,
  MissingField,
  NodeNotFound,
  NoCapacity,
  PodNotFound,
  WouldExceedNode,
  // framework
  UnroutableAddress,
  DuplicateAddress,
  NoActors,
  UnknownApp,
  NoCapableActor,
  IncapableActor,
  BadInput,
  Timeout,
  MasterUnreachable,
  StorageFailure,
  // comm
  NoRoute,
  MalformedPayload,
  // apps
  UnknownTaskKind,
  DivisionByZero,
  // simnet
  UnknownNodePair,
  TimeReversal,
  IncompleteLayout,
  // bench
  InsufficientSamples,
  MixedConditions,
  BootFailure,
};

const char* errc_name(Errc c);

/// Domain error carrying one of the named condition codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace fogline
