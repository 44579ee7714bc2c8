#include "fogline/error.hpp"

namespace fogline {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::SubnetExhausted: return "SubnetExhausted";
    case Errc::DuplicateVpnIp: return "DuplicateVpnIp";
    case Errc::UnknownPeer: return "UnknownPeer";
    case Errc::OverlappingRanges: return "OverlappingRanges";
    case Errc::BadToken: return "BadToken";
    case Errc::DuplicateNode: return "DuplicateNode";
    case Errc::UnreachableServer: return "UnreachableServer";
    case Errc::MalformedDocument: return "MalformedDocument";
    case Errc::MissingField: return "MissingField";
    case Errc::NodeNotFound: return "NodeNotFound";
    case Errc::NoCapacity: return "NoCapacity";
    case Errc::PodNotFound: return "PodNotFound";
    case Errc::WouldExceedNode: return "WouldExceedNode";
    case Errc::UnroutableAddress: return "UnroutableAddress";
    case Errc::DuplicateAddress: return "DuplicateAddress";
    case Errc::NoActors: return "NoActors";
    case Errc::UnknownApp: return "UnknownApp";
    case Errc::NoCapableActor: return "NoCapableActor";
    case Errc::IncapableActor: return "IncapableActor";
    case Errc::BadInput: return "BadInput";
    case Errc::Timeout: return "Timeout";
    case Errc::MasterUnreachable: return "MasterUnreachable";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::NoRoute: return "NoRoute";
    case Errc::MalformedPayload: return "MalformedPayload";
    case Errc::UnknownTaskKind: return "UnknownTaskKind";
    case Errc::DivisionByZero: return "DivisionByZero";
    case Errc::UnknownNodePair: return "UnknownNodePair";
    case Errc::TimeReversal: return "TimeReversal";
    case Errc::IncompleteLayout: return "IncompleteLayout";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::MixedConditions: return "MixedConditions";
    case Errc::BootFailure: return "BootFailure";
  }
  return "UnknownError";
}

}  // namespace fogline
