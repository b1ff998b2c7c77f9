// Copyright 2026 The Thrillette Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace thrillette {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Transport failures: unreachable hosts, lost connections, aborted groups.
class NetError : public Error
{
public:
    using Error::Error;
};

/// Malformed frames, handshake mismatches, out-of-order sequence numbers.
class ProtocolError : public NetError
{
public:
    using NetError::NetError;
};

/// Collective operations were entered in different orders on two workers.
class CollectiveMismatch : public ProtocolError
{
public:
    using ProtocolError::ProtocolError;
};

class IoError : public Error
{
public:
    using Error::Error;
};

/// Serialized data ended in the middle of an item or has a bad header.
class CorruptionError : public Error
{
public:
    using Error::Error;
};

/// A caller broke an operation's precondition.
class ContractError : public Error
{
public:
    using Error::Error;
};

/// Thrown on the worker whose DIA operation failed during a stage.
class StageError : public Error
{
public:
    StageError(std::string op_name, const std::string& what)
        : Error("operation " + op_name + " failed: " + what),
          op_name_(std::move(op_name)) { }

    const std::string& op_name() const noexcept { return op_name_; }

private:
    std::string op_name_;
};

} // namespace thrillette
