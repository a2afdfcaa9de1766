#include "mendkit/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mendkit/binio.hpp"

namespace mendkit {

namespace fs = std::filesystem;

namespace {
constexpr double kDegenerateArea = 1e-12;

uint64_t edgeKey(uint32_t a, uint32_t b) {
    return (static_cast<uint64_t>(a) << 32) | b;
}
}  // namespace

double TriMesh::triangleArea(size_t t) const {
    Vec3 a = triVertex(t, 0), b = triVertex(t, 1), c = triVertex(t, 2);
    return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 TriMesh::triangleNormal(size_t t) const {
    Vec3 a = triVertex(t, 0), b = triVertex(t, 1), c = triVertex(t, 2);
    Vec3 n = (b - a).cross(c - a);
    double len = n.norm();
    if (len == 0.0) return {0, 0, 0};
    return n / len;
}

Aabb TriMesh::bounds() const {
    Aabb box;
    for (const auto& v : vertices) box.expand(v);
    return box;
}

bool computeWatertight(const TriMesh& mesh) {
    if (mesh.triangles.empty()) return false;
    // Closed 2-manifold with consistent winding: every directed edge occurs
    // exactly once and its reverse exactly once.
    std::unordered_map<uint64_t, int> directed;
    directed.reserve(mesh.triangles.size() * 3);
    for (const auto& t : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            uint32_t a = t[e], b = t[(e + 1) % 3];
            if (++directed[edgeKey(a, b)] > 1) return false;
        }
    }
    for (const auto& [key, count] : directed) {
        uint32_t a = static_cast<uint32_t>(key >> 32);
        uint32_t b = static_cast<uint32_t>(key & 0xffffffffU);
        auto it = directed.find(edgeKey(b, a));
        if (it == directed.end() || it->second != 1) return false;
    }
    return true;
}

void cleanMesh(TriMesh& mesh) {
    for (const auto& t : mesh.triangles)
        for (uint32_t idx : t)
            if (idx >= mesh.vertices.size())
                throw std::runtime_error("triangle index out of range");

    std::vector<std::array<uint32_t, 3>> kept;
    kept.reserve(mesh.triangles.size());
    for (size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto& t = mesh.triangles[i];
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
        if (mesh.triangleArea(i) < kDegenerateArea) continue;
        kept.push_back(t);
    }
    mesh.triangles = std::move(kept);

    // Prune unreferenced vertices, preserving order.
    std::vector<uint32_t> remap(mesh.vertices.size(), UINT32_MAX);
    std::vector<Vec3> verts;
    verts.reserve(mesh.vertices.size());
    for (auto& t : mesh.triangles) {
        for (auto& idx : t) {
            if (remap[idx] == UINT32_MAX) {
                remap[idx] = static_cast<uint32_t>(verts.size());
                verts.push_back(mesh.vertices[idx]);
            }
            idx = remap[idx];
        }
    }
    mesh.vertices = std::move(verts);
    mesh.watertight = computeWatertight(mesh);
}

// ---------------------------------------------------------------------------
// OBJ
// ---------------------------------------------------------------------------

namespace {

TriMesh loadObj(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    TriMesh mesh;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 v;
            if (!(ss >> v.x >> v.y >> v.z))
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                         ": malformed vertex");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<long> idx;
            std::string tok;
            while (ss >> tok) {
                // "i", "i/t", "i//n", "i/t/n" — the vertex index leads.
                size_t slash = tok.find('/');
                std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                long v = 0;
                auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), v);
                if (ec != std::errc() || v == 0)
                    throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                             ": malformed face index");
                if (v < 0) v = static_cast<long>(mesh.vertices.size()) + v + 1;
                idx.push_back(v - 1);
            }
            if (idx.size() < 3)
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                         ": face with fewer than 3 vertices");
            // Fan-triangulate polygons.
            for (size_t k = 1; k + 1 < idx.size(); ++k)
                mesh.triangles.push_back({static_cast<uint32_t>(idx[0]),
                                          static_cast<uint32_t>(idx[k]),
                                          static_cast<uint32_t>(idx[k + 1])});
        }
        // Comments, normals, texcoords, groups, materials are skipped.
    }
    return mesh;
}

void saveObj(const TriMesh& mesh, const fs::path& path) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& v : mesh.vertices)
        out << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    atomicWriteFile(path, out.str());
}

// ---------------------------------------------------------------------------
// PLY (binary little-endian; vertex x/y/z + face vertex index list)
// ---------------------------------------------------------------------------

struct PlyProperty {
    std::string type;
    std::string name;
    bool isList = false;
    std::string countType;
};

size_t plyTypeSize(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
        t == "float32")
        return 4;
    if (t == "double" || t == "float64" || t == "int64" || t == "uint64") return 8;
    throw std::runtime_error("unsupported PLY type: " + t);
}

double plyReadScalar(BinReader& r, const std::string& t) {
    if (t == "char" || t == "int8") return r.get<int8_t>();
    if (t == "uchar" || t == "uint8") return r.get<uint8_t>();
    if (t == "short" || t == "int16") return r.get<int16_t>();
    if (t == "ushort" || t == "uint16") return r.get<uint16_t>();
    if (t == "int" || t == "int32") return r.get<int32_t>();
    if (t == "uint" || t == "uint32") return r.get<uint32_t>();
    if (t == "float" || t == "float32") return r.get<float>();
    if (t == "double" || t == "float64") return r.get<double>();
    throw std::runtime_error("unsupported PLY type: " + t);
}

TriMesh loadPly(const fs::path& path) {
    auto bytes = readFileBytes(path);
    std::string header;
    size_t headerEnd = 0;
    {
        const std::string needle = "end_header\n";
        std::string_view sv(bytes.data(), bytes.size());
        size_t pos = sv.find(needle);
        if (pos == std::string_view::npos) throw std::runtime_error("PLY: no end_header");
        headerEnd = pos + needle.size();
        header.assign(sv.substr(0, headerEnd));
    }
    std::istringstream hs(header);
    std::string line;
    std::getline(hs, line);
    if (line != "ply") throw std::runtime_error("PLY: bad magic");

    struct Element {
        std::string name;
        size_t count = 0;
        std::vector<PlyProperty> props;
    };
    std::vector<Element> elements;
    bool binaryLE = false;
    while (std::getline(hs, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "format") {
            std::string fmt;
            ss >> fmt;
            binaryLE = (fmt == "binary_little_endian");
            if (!binaryLE && fmt != "ascii")
                throw std::runtime_error("PLY: unsupported format " + fmt);
            if (fmt == "ascii") throw std::runtime_error("PLY: ASCII not supported, use OBJ");
        } else if (tag == "element") {
            Element e;
            ss >> e.name >> e.count;
            elements.push_back(e);
        } else if (tag == "property") {
            if (elements.empty()) throw std::runtime_error("PLY: property before element");
            PlyProperty p;
            std::string t;
            ss >> t;
            if (t == "list") {
                p.isList = true;
                ss >> p.countType >> p.type >> p.name;
            } else {
                p.type = t;
                ss >> p.name;
            }
            elements.back().props.push_back(p);
        }
    }

    BinReader r(bytes.data() + headerEnd, bytes.size() - headerEnd);
    TriMesh mesh;
    for (const auto& e : elements) {
        if (e.name == "vertex") {
            int xi = -1, yi = -1, zi = -1;
            for (size_t i = 0; i < e.props.size(); ++i) {
                if (e.props[i].name == "x") xi = static_cast<int>(i);
                if (e.props[i].name == "y") yi = static_cast<int>(i);
                if (e.props[i].name == "z") zi = static_cast<int>(i);
            }
            if (xi < 0 || yi < 0 || zi < 0) throw std::runtime_error("PLY: vertex without x/y/z");
            mesh.vertices.reserve(e.count);
            for (size_t v = 0; v < e.count; ++v) {
                Vec3 p;
                for (size_t i = 0; i < e.props.size(); ++i) {
                    if (e.props[i].isList) throw std::runtime_error("PLY: list property on vertex");
                    double val = plyReadScalar(r, e.props[i].type);
                    if (static_cast<int>(i) == xi) p.x = val;
                    if (static_cast<int>(i) == yi) p.y = val;
                    if (static_cast<int>(i) == zi) p.z = val;
                }
                mesh.vertices.push_back(p);
            }
        } else if (e.name == "face") {
            for (size_t f = 0; f < e.count; ++f) {
                for (const auto& p : e.props) {
                    if (p.isList) {
                        auto n = static_cast<size_t>(plyReadScalar(r, p.countType));
                        std::vector<uint32_t> idx(n);
                        for (size_t i = 0; i < n; ++i)
                            idx[i] = static_cast<uint32_t>(plyReadScalar(r, p.type));
                        if (p.name == "vertex_indices" || p.name == "vertex_index") {
                            if (n < 3) throw std::runtime_error("PLY: face with < 3 vertices");
                            for (size_t k = 1; k + 1 < n; ++k)
                                mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
                        }
                    } else {
                        plyReadScalar(r, p.type);
                    }
                }
            }
        } else {
            // Skip unknown fixed-size elements.
            size_t stride = 0;
            for (const auto& p : e.props) {
                if (p.isList) throw std::runtime_error("PLY: list in unknown element " + e.name);
                stride += plyTypeSize(p.type);
            }
            std::vector<char> skip(stride);
            for (size_t i = 0; i < e.count; ++i) r.getBytes(skip.data(), stride);
        }
    }
    return mesh;
}

void savePly(const TriMesh& mesh, const fs::path& path) {
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n"
           << "element vertex " << mesh.vertices.size() << "\n"
           << "property float x\nproperty float y\nproperty float z\n"
           << "element face " << mesh.triangles.size() << "\n"
           << "property list uchar int vertex_indices\n"
           << "end_header\n";
    BinWriter w;
    std::string h = header.str();
    w.putBytes(h.data(), h.size());
    for (const auto& v : mesh.vertices) {
        w.put<float>(static_cast<float>(v.x));
        w.put<float>(static_cast<float>(v.y));
        w.put<float>(static_cast<float>(v.z));
    }
    for (const auto& t : mesh.triangles) {
        w.put<uint8_t>(3);
        w.put<int32_t>(static_cast<int32_t>(t[0]));
        w.put<int32_t>(static_cast<int32_t>(t[1]));
        w.put<int32_t>(static_cast<int32_t>(t[2]));
    }
    atomicWriteFile(path, w.bytes());
}

}  // namespace

TriMesh loadMesh(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    TriMesh mesh;
    if (ext == ".obj") mesh = loadObj(path);
    else if (ext == ".ply") mesh = loadPly(path);
    else throw std::runtime_error("unsupported mesh format: " + path.string());
    if (mesh.vertices.empty() || mesh.triangles.empty())
        throw std::runtime_error("empty mesh: " + path.string());
    cleanMesh(mesh);
    if (mesh.triangles.empty()) throw std::runtime_error("mesh degenerate after cleaning: " + path.string());
    return mesh;
}

void saveMesh(const TriMesh& mesh, const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".obj") saveObj(mesh, path);
    else if (ext == ".ply") savePly(mesh, path);
    else throw std::runtime_error("unsupported mesh format: " + path.string());
}

std::pair<TriMesh, SimilarityTransform> normalizeUnitCube(const TriMesh& mesh) {
    if (mesh.vertices.empty()) throw std::runtime_error("normalize: empty mesh");
    Aabb box = mesh.bounds();
    Vec3 ext = box.extent();
    double longest = ext.maxCoeff();
    if (!(longest > 0.0)) throw std::runtime_error("normalize: zero-extent mesh");
    SimilarityTransform tf;
    tf.translation = -box.center();
    tf.scale = 1.0 / longest;
    TriMesh out = mesh;
    for (auto& v : out.vertices) v = tf.apply(v);
    out.watertight = mesh.watertight;
    return {std::move(out), tf};
}

double surfaceArea(const TriMesh& mesh) {
    if (mesh.triangles.empty()) throw std::runtime_error("surface_area: empty mesh");
    double total = 0.0;
    for (size_t t = 0; t < mesh.triangles.size(); ++t) total += mesh.triangleArea(t);
    return total;
}

namespace {
struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};
}  // namespace

int connectedComponents(const TriMesh& mesh) {
    if (mesh.triangles.empty()) return 0;
    UnionFind uf(mesh.triangles.size());
    std::unordered_map<uint64_t, int> firstTri;
    firstTri.reserve(mesh.triangles.size() * 3);
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int e = 0; e < 3; ++e) {
            uint32_t a = tri[e], b = tri[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            auto [it, inserted] = firstTri.try_emplace(edgeKey(a, b), static_cast<int>(t));
            if (!inserted) uf.unite(static_cast<int>(t), it->second);
        }
    }
    int count = 0;
    for (size_t t = 0; t < mesh.triangles.size(); ++t)
        if (uf.find(static_cast<int>(t)) == static_cast<int>(t)) ++count;
    return count;
}

std::vector<SurfaceSample> sampleSurface(const TriMesh& mesh, size_t n, uint64_t seed) {
    if (mesh.triangles.empty()) throw std::runtime_error("sample_surface: empty mesh");
    if (n == 0) throw std::invalid_argument("sample_surface: n must be > 0");
    std::vector<double> cumArea(mesh.triangles.size());
    double total = 0.0;
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        total += mesh.triangleArea(t);
        cumArea[t] = total;
    }
    if (!(total > 0.0)) throw std::runtime_error("sample_surface: zero total area");

    Rng rng(seed);
    std::vector<SurfaceSample> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        double u = uniformReal(rng, 0.0, total);
        auto it = std::lower_bound(cumArea.begin(), cumArea.end(), u);
        size_t t = static_cast<size_t>(std::min<std::ptrdiff_t>(
            it - cumArea.begin(), static_cast<std::ptrdiff_t>(cumArea.size()) - 1));
        // Uniform barycentric coordinates via the square-root trick.
        double r1 = std::sqrt(uniformReal(rng, 0.0, 1.0));
        double r2 = uniformReal(rng, 0.0, 1.0);
        Vec3 a = mesh.triVertex(t, 0), b = mesh.triVertex(t, 1), c = mesh.triVertex(t, 2);
        Vec3 p = a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
        out.push_back({p, static_cast<uint32_t>(t)});
    }
    return out;
}

}  // namespace mendkit
