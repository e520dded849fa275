/*
 * frbench - Dense 3D face reconstruction benchmarking toolkit.
 *
 * File: src/mesh_io.cpp
 *
 * Copyright 2026 The frbench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "frbench/geometry.hpp"
#include "frbench/text_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <type_traits>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace frbench {

void TriMesh::validate() const
{
    const auto n = static_cast<long long>(vertices.size());
    for (std::size_t v = 0; v < vertices.size(); ++v)
    {
        if (!vertices[v].allFinite())
        {
            throw Error(ErrorCode::InvalidArgument, "vertex " + std::to_string(v) + " is not finite");
        }
    }
    for (std::size_t t = 0; t < triangles.size(); ++t)
    {
        const auto& tri = triangles[t];
        for (int idx : tri)
        {
            if (idx < 0 || idx >= n)
            {
                throw Error(ErrorCode::IndexOutOfRange, "triangle " + std::to_string(t) + " references vertex " +
                                                            std::to_string(idx) + " of " + std::to_string(n));
            }
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
        {
            throw Error(ErrorCode::InvalidArgument,
                        "triangle " + std::to_string(t) + " references the same vertex twice");
        }
    }
}

MeshFormat mesh_format_from_path(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".obj")
        return MeshFormat::Obj;
    if (ext == ".ply")
        return MeshFormat::Ply;
    throw Error(ErrorCode::UnsupportedFormat, "cannot infer mesh format from '" + path.string() + "'");
}

namespace {

[[noreturn]] void parse_fail(const std::string& what, std::size_t line)
{
    throw Error(ErrorCode::Parse, what + " (line " + std::to_string(line) + ")");
}

void add_polygon(TriMesh& mesh, const std::vector<int>& poly, std::size_t line, std::vector<std::string>* warnings)
{
    if (poly.size() < 3)
    {
        parse_fail("face with fewer than 3 vertices", line);
    }
    if (poly.size() > 3 && warnings)
    {
        warnings->push_back("line " + std::to_string(line) + ": " + std::to_string(poly.size()) +
                            "-gon fan-triangulated");
    }
    for (std::size_t k = 1; k + 1 < poly.size(); ++k)
    {
        mesh.triangles.push_back({poly[0], poly[k], poly[k + 1]});
    }
}

void check_indices(const TriMesh& mesh)
{
    const auto n = static_cast<long long>(mesh.vertices.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    {
        for (int idx : mesh.triangles[t])
        {
            if (idx < 0 || idx >= n)
            {
                throw Error(ErrorCode::IndexOutOfRange, "face " + std::to_string(t) + " references vertex " +
                                                            std::to_string(idx + 1) + " of " + std::to_string(n));
            }
        }
    }
}

} // namespace

TriMesh read_obj(std::istream& in, std::vector<std::string>* warnings)
{
    TriMesh mesh;
    std::string line;
    std::size_t line_no = 0;
    std::vector<int> poly;
    while (std::getline(in, line))
    {
        ++line_no;
        const auto tokens = split_whitespace(line);
        if (tokens.empty() || tokens[0].front() == '#')
            continue;
        if (tokens[0] == "v")
        {
            if (tokens.size() < 4)
                parse_fail("vertex record needs 3 coordinates", line_no);
            Vec3 p;
            for (int k = 0; k < 3; ++k)
            {
                if (!parse_double(tokens[k + 1], p[k]))
                    parse_fail("bad coordinate '" + std::string(tokens[k + 1]) + "'", line_no);
            }
            mesh.vertices.push_back(p);
        }
        else if (tokens[0] == "f")
        {
            poly.clear();
            for (std::size_t k = 1; k < tokens.size(); ++k)
            {
                // "i", "i/t", "i//n", "i/t/n"; only the position index matters.
                const auto slash = tokens[k].find('/');
                const auto idx_tok = tokens[k].substr(0, slash);
                long long idx = 0;
                const auto res = std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), idx);
                if (res.ec != std::errc() || res.ptr != idx_tok.data() + idx_tok.size() || idx == 0)
                    parse_fail("bad face index '" + std::string(tokens[k]) + "'", line_no);
                const auto n = static_cast<long long>(mesh.vertices.size());
                const long long zero_based = idx > 0 ? idx - 1 : n + idx;
                if (zero_based < 0 || zero_based >= n)
                {
                    throw Error(ErrorCode::IndexOutOfRange, "face references vertex " + std::to_string(idx) +
                                                                " but only " + std::to_string(n) +
                                                                " vertices are defined (line " +
                                                                std::to_string(line_no) + ")");
                }
                poly.push_back(static_cast<int>(zero_based));
            }
            add_polygon(mesh, poly, line_no, warnings);
        }
    }
    mesh.validate();
    return mesh;
}

namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType ply_type(std::string_view name, std::size_t line)
{
    if (name == "char" || name == "int8")
        return PlyType::Int8;
    if (name == "uchar" || name == "uint8")
        return PlyType::UInt8;
    if (name == "short" || name == "int16")
        return PlyType::Int16;
    if (name == "ushort" || name == "uint16")
        return PlyType::UInt16;
    if (name == "int" || name == "int32")
        return PlyType::Int32;
    if (name == "uint" || name == "uint32")
        return PlyType::UInt32;
    if (name == "float" || name == "float32")
        return PlyType::Float32;
    if (name == "double" || name == "float64")
        return PlyType::Float64;
    parse_fail("unknown PLY property type '" + std::string(name) + "'", line);
}

std::size_t ply_size(PlyType t)
{
    switch (t)
    {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
    }
    return 0;
}

struct PlyProperty
{
    std::string name;
    PlyType type = PlyType::Float32;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct PlyElement
{
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

template <typename T>
T load_le(const char* p)
{
    T value;
    std::memcpy(&value, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
    {
        auto* bytes = reinterpret_cast<unsigned char*>(&value);
        std::reverse(bytes, bytes + sizeof(T));
    }
    return value;
}

class BinaryReader
{
public:
    BinaryReader(std::istream& in) : in_(in) {}

    double read(PlyType t)
    {
        char buf[8];
        const std::size_t n = ply_size(t);
        in_.read(buf, static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n))
        {
            throw Error(ErrorCode::Parse, "unexpected end of binary PLY data at byte offset " +
                                              std::to_string(offset_));
        }
        offset_ += n;
        switch (t)
        {
        case PlyType::Int8: return static_cast<double>(static_cast<std::int8_t>(buf[0]));
        case PlyType::UInt8: return static_cast<double>(static_cast<std::uint8_t>(buf[0]));
        case PlyType::Int16: return load_le<std::int16_t>(buf);
        case PlyType::UInt16: return load_le<std::uint16_t>(buf);
        case PlyType::Int32: return load_le<std::int32_t>(buf);
        case PlyType::UInt32: return load_le<std::uint32_t>(buf);
        case PlyType::Float32: return load_le<float>(buf);
        case PlyType::Float64: return load_le<double>(buf);
        }
        return 0.0;
    }

private:
    std::istream& in_;
    std::size_t offset_ = 0;
};

class AsciiReader
{
public:
    AsciiReader(std::istream& in, std::size_t line) : in_(in), line_(line) {}

    double read(PlyType)
    {
        while (pos_ >= tokens_.size())
        {
            if (!std::getline(in_, current_))
                parse_fail("unexpected end of PLY data", line_);
            ++line_;
            tokens_ = split_whitespace(current_);
            pos_ = 0;
        }
        double v = 0.0;
        if (!parse_double(tokens_[pos_], v))
            parse_fail("bad number '" + std::string(tokens_[pos_]) + "'", line_);
        ++pos_;
        return v;
    }

    /// Records are one per line; leftover tokens on a finished line are an error.
    void end_record()
    {
        if (pos_ != tokens_.size())
            parse_fail("unexpected extra values in PLY record", line_);
        tokens_.clear();
        pos_ = 0;
    }

    std::size_t line() const { return line_; }

private:
    std::istream& in_;
    std::size_t line_;
    std::string current_;
    std::vector<std::string_view> tokens_;
    std::size_t pos_ = 0;
};

template <typename Reader>
void read_ply_body(Reader& reader, const std::vector<PlyElement>& elements, TriMesh& mesh,
                   std::vector<std::string>* warnings)
{
    std::vector<int> poly;
    for (const auto& element : elements)
    {
        int ix = -1, iy = -1, iz = -1;
        for (std::size_t k = 0; k < element.properties.size(); ++k)
        {
            const auto& name = element.properties[k].name;
            if (name == "x")
                ix = static_cast<int>(k);
            else if (name == "y")
                iy = static_cast<int>(k);
            else if (name == "z")
                iz = static_cast<int>(k);
        }
        const bool is_vertex = element.name == "vertex";
        const bool is_face = element.name == "face";
        if (is_vertex && (ix < 0 || iy < 0 || iz < 0))
        {
            throw Error(ErrorCode::Parse, "PLY vertex element lacks x/y/z properties");
        }
        for (std::size_t r = 0; r < element.count; ++r)
        {
            Vec3 p = Vec3::Zero();
            bool face_seen = false;
            for (std::size_t k = 0; k < element.properties.size(); ++k)
            {
                const auto& prop = element.properties[k];
                if (prop.is_list)
                {
                    const double count_d = reader.read(prop.count_type);
                    if (count_d < 0 || count_d != std::floor(count_d))
                        throw Error(ErrorCode::Parse, "bad PLY list length");
                    const auto count = static_cast<std::size_t>(count_d);
                    const bool take = is_face && !face_seen &&
                                      (prop.name == "vertex_indices" || prop.name == "vertex_index");
                    poly.clear();
                    for (std::size_t c = 0; c < count; ++c)
                    {
                        const double idx = reader.read(prop.type);
                        if (take)
                        {
                            if (idx < 0 || idx != std::floor(idx) || idx >= static_cast<double>(mesh.vertices.size()))
                            {
                                throw Error(ErrorCode::IndexOutOfRange,
                                            "PLY face " + std::to_string(r) + " references vertex " +
                                                format_double(idx) + " of " + std::to_string(mesh.vertices.size()));
                            }
                            poly.push_back(static_cast<int>(idx));
                        }
                    }
                    if (take)
                    {
                        face_seen = true;
                        add_polygon(mesh, poly, r, warnings);
                    }
                }
                else
                {
                    const double v = reader.read(prop.type);
                    if (static_cast<int>(k) == ix)
                        p.x() = v;
                    else if (static_cast<int>(k) == iy)
                        p.y() = v;
                    else if (static_cast<int>(k) == iz)
                        p.z() = v;
                }
            }
            if constexpr (std::is_same_v<Reader, AsciiReader>)
            {
                reader.end_record();
            }
            if (is_vertex)
                mesh.vertices.push_back(p);
        }
    }
}

} // namespace

TriMesh read_ply(std::istream& in, std::vector<std::string>* warnings)
{
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line) || trim(line) != "ply")
        parse_fail("missing 'ply' magic", 1);
    ++line_no;

    enum class Encoding { Ascii, BinaryLE, BinaryBE } encoding = Encoding::Ascii;
    bool have_format = false;
    std::vector<PlyElement> elements;
    bool header_done = false;
    while (std::getline(in, line))
    {
        ++line_no;
        const auto tokens = split_whitespace(line);
        if (tokens.empty())
            continue;
        if (tokens[0] == "end_header")
        {
            header_done = true;
            break;
        }
        if (tokens[0] == "comment" || tokens[0] == "obj_info")
            continue;
        if (tokens[0] == "format")
        {
            if (tokens.size() < 2)
                parse_fail("bad format line", line_no);
            if (tokens[1] == "ascii")
                encoding = Encoding::Ascii;
            else if (tokens[1] == "binary_little_endian")
                encoding = Encoding::BinaryLE;
            else if (tokens[1] == "binary_big_endian")
                encoding = Encoding::BinaryBE;
            else
                parse_fail("unknown PLY format '" + std::string(tokens[1]) + "'", line_no);
            have_format = true;
        }
        else if (tokens[0] == "element")
        {
            if (tokens.size() != 3)
                parse_fail("bad element line", line_no);
            PlyElement el;
            el.name = std::string(tokens[1]);
            double count = 0;
            if (!parse_double(tokens[2], count) || count < 0 || count != std::floor(count))
                parse_fail("bad element count", line_no);
            el.count = static_cast<std::size_t>(count);
            elements.push_back(std::move(el));
        }
        else if (tokens[0] == "property")
        {
            if (elements.empty())
                parse_fail("property before any element", line_no);
            PlyProperty prop;
            if (tokens.size() == 5 && tokens[1] == "list")
            {
                prop.is_list = true;
                prop.count_type = ply_type(tokens[2], line_no);
                prop.type = ply_type(tokens[3], line_no);
                prop.name = std::string(tokens[4]);
            }
            else if (tokens.size() == 3)
            {
                prop.type = ply_type(tokens[1], line_no);
                prop.name = std::string(tokens[2]);
            }
            else
            {
                parse_fail("bad property line", line_no);
            }
            elements.back().properties.push_back(std::move(prop));
        }
        else
        {
            parse_fail("unknown header keyword '" + std::string(tokens[0]) + "'", line_no);
        }
    }
    if (!header_done)
        parse_fail("missing end_header", line_no);
    if (!have_format)
        parse_fail("missing format line", line_no);
    if (encoding == Encoding::BinaryBE)
        throw Error(ErrorCode::UnsupportedFormat, "binary_big_endian PLY is not supported");

    TriMesh mesh;
    if (encoding == Encoding::Ascii)
    {
        AsciiReader reader(in, line_no);
        read_ply_body(reader, elements, mesh, warnings);
    }
    else
    {
        BinaryReader reader(in);
        read_ply_body(reader, elements, mesh, warnings);
    }
    check_indices(mesh);
    mesh.validate();
    return mesh;
}

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format, std::vector<std::string>* warnings)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open mesh '" + path.string() + "'");
    try
    {
        return format == MeshFormat::Obj ? read_obj(in, warnings) : read_ply(in, warnings);
    } catch (const Error& e)
    {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

TriMesh load_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings)
{
    return load_mesh(path, mesh_format_from_path(path), warnings);
}

void write_obj(std::ostream& out, const TriMesh& mesh)
{
    for (const auto& v : mesh.vertices)
    {
        out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
    }
    for (const auto& t : mesh.triangles)
    {
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
}

void write_ply(std::ostream& out, const TriMesh& mesh, bool binary)
{
    out << "ply\n"
        << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
        << "element vertex " << mesh.vertices.size() << '\n'
        << "property double x\nproperty double y\nproperty double z\n"
        << "element face " << mesh.triangles.size() << '\n'
        << "property list uchar int vertex_indices\n"
        << "end_header\n";
    if (!binary)
    {
        for (const auto& v : mesh.vertices)
            out << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
        for (const auto& t : mesh.triangles)
            out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
        return;
    }
    auto put = [&out](auto value) {
        char buf[sizeof(value)];
        std::memcpy(buf, &value, sizeof(value));
        if constexpr (std::endian::native == std::endian::big)
            std::reverse(buf, buf + sizeof(value));
        out.write(buf, sizeof(value));
    };
    for (const auto& v : mesh.vertices)
    {
        put(v.x());
        put(v.y());
        put(v.z());
    }
    for (const auto& t : mesh.triangles)
    {
        put(static_cast<std::uint8_t>(3));
        for (int idx : t)
            put(static_cast<std::int32_t>(idx));
    }
}

void save_mesh(const std::filesystem::path& path, const TriMesh& mesh, MeshFormat format, bool binary_ply)
{
    std::ostringstream out(std::ios::binary);
    if (format == MeshFormat::Obj)
        write_obj(out, mesh);
    else
        write_ply(out, mesh, binary_ply);
    write_text_file(path, out.str());
}

void save_mesh(const std::filesystem::path& path, const TriMesh& mesh)
{
    save_mesh(path, mesh, mesh_format_from_path(path));
}

} // namespace frbench
