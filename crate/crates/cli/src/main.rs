#[global_allocator]
static ALLOC: tsweave::memtrack::TrackingAllocator = tsweave::memtrack::TrackingAllocator;

fn main() {
    std::process::exit(tsweave_cli::run(std::env::args_os()));
}
