//! Built-in mazes: layout, observations, walls and shortest paths.

use geasd::maze::{builtin, load_maze_named, Action, BUILTIN_MAZES};

fn main() -> geasd::Result<()> {
    for name in BUILTIN_MAZES {
        let maze = builtin(name)?;
        let goal = maze.desired_goals()[0];
        let path = maze
            .shortest_path(maze.start(), goal)
            .expect("goal reachable");
        println!(
            "{name}: start {} goal {} shortest path {} moves",
            maze.start(),
            goal,
            path.len() - 1
        );
        println!("{}", maze.render());
    }

    // Walls block moves; the agent stays put.
    let maze = builtin("serpentine")?;
    let s = maze.start_observation();
    for a in Action::ALL {
        println!(
            "from {} move {a}: {} (blocked {})",
            s.cell,
            maze.step(&s, a).cell,
            s.blocked(a)
        );
    }

    // Mazes round-trip through their text document.
    let doc = maze.to_document();
    let again = load_maze_named("copy", &doc)?;
    assert_eq!(again.to_document(), doc);
    println!("document round trip ok ({} lines)", doc.lines().count());
    Ok(())
}
