// Runs one compiled kernel over FBC inputs in its own process.
//   flarelite-kernel-runner <library> <out.fbc> [<in.fbc> <rows>]...
#include "flarelite/error.hpp"
#include "flarelite/fbc.hpp"
#include "flarelite/native.hpp"

#include <cstdio>
#include <iostream>

using namespace flarelite;

int main(int argc, char** argv) {
    if (argc < 3 || (argc - 3) % 2 != 0) {
        std::cerr << "usage: flarelite-kernel-runner <library> <out.fbc> [<in.fbc> <rows>]...\n";
        return 2;
    }
    try {
        auto kernel = CompiledKernel::load(argv[1]);
        KernelMeta meta = kernel->meta();
        std::vector<ColumnTable> tables;
        std::vector<std::uint64_t> rows;
        for (int a = 3; a < argc; a += 2) {
            tables.push_back(read_fbc(argv[a]));
            rows.push_back(std::stoull(argv[a + 1]));
        }
        if (tables.size() != meta.inputs) throw Error("kernel expects " + std::to_string(meta.inputs) + " inputs");
        std::vector<std::vector<const Column*>> cols;
        for (const auto& t : tables) {
            std::vector<const Column*> c;
            for (const auto& col : t.columns()) c.push_back(&col);
            cols.push_back(std::move(c));
        }
        std::vector<std::uint64_t> desc = build_descriptor(cols, rows);
        KernelEntry entry = kernel->entry();
        void* state = reinterpret_cast<void*>(static_cast<std::intptr_t>(entry(kOpNewState, desc.data(), nullptr, nullptr, 0, 0, 0)));
        if (!state) throw Error("kernel rejected the descriptor block");
        if (entry(kOpRunAll, desc.data(), state, nullptr, 0, 0, 0) != 0) {
            char msg[256] = {};
            entry(kOpError, desc.data(), state, msg, 0, 0, 0);
            std::cerr << msg << "\n";
            return 3;
        }
        KernelResult res{};
        entry(kOpResult, desc.data(), state, &res, 0, 0, 0);
        std::vector<ColumnDef> defs;
        for (std::uint32_t c = 0; c < meta.outputs; ++c) {
            defs.push_back({"c" + std::to_string(c), static_cast<DataType>(meta.output_types[c]), meta.output_nullable[c] != 0});
        }
        write_fbc(cells_to_table(Schema(defs), res.cells, res.rows), argv[2]);
        entry(kOpFreeState, desc.data(), state, nullptr, 0, 0, 0);
        std::cout << res.rows << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
