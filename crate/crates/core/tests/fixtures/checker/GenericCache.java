import java.util.HashMap;
import java.util.Map;

public class GenericCache {
    private static GenericCache instance;
    private final Map<String, java.util.List<Integer>> entries = new HashMap<>();

    private GenericCache() {}

    public static GenericCache getInstance() {
        if (instance == null) {
            instance = new GenericCache();
        }
        return instance;
    }

    public <T extends Comparable<T>> T max(T a, T b) {
        return a.compareTo(b) >= 0 ? a : b;
    }
}
